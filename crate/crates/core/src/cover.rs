//! The double cover induced by a gauge field.
//!
//! Each base vertex `v` lifts to `(v,1)` and `(v,2)`. An edge with σ(e) = +1
//! lifts to two within-sheet edges, an edge with σ(e) = -1 to two
//! cross-sheet edges. The deck involution swaps sheets.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::gauge::DiscretePath;
use crate::network::{EdgeRecord, ElectricalNetwork, GaugeField, NetworkFile, VertexSigns};
use crate::sign::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sheet {
    One,
    Two,
}

impl Sheet {
    pub fn other(self) -> Sheet {
        match self {
            Sheet::One => Sheet::Two,
            Sheet::Two => Sheet::One,
        }
    }

    fn index(self) -> usize {
        match self {
            Sheet::One => 0,
            Sheet::Two => 1,
        }
    }

    fn label(self) -> u8 {
        match self {
            Sheet::One => 1,
            Sheet::Two => 2,
        }
    }

    /// Sheet reached after crossing an edge with sign `s`.
    pub fn across(self, s: Sign) -> Sheet {
        match s {
            Sign::Plus => self,
            Sign::Minus => self.other(),
        }
    }
}

pub fn cover_vertex_id(base_id: &str, sheet: Sheet) -> String {
    format!("({},{})", base_id, sheet.label())
}

/// Endpoints, as `(base vertex, sheet)` pairs, of the two lifts of a base
/// edge `{u, v}` with sign `s`.
pub fn lift_edge(u: usize, v: usize, s: Sign) -> [((usize, Sheet), (usize, Sheet)); 2] {
    [((u, Sheet::One), (v, Sheet::One.across(s))), ((u, Sheet::Two), (v, Sheet::Two.across(s)))]
}

#[derive(Debug, Clone)]
pub struct DoubleCover {
    base: ElectricalNetwork,
    gauge: GaugeField,
    cover: ElectricalNetwork,
    /// base vertex → [sheet 1 lift, sheet 2 lift] as cover indices
    lifts: Vec<[usize; 2]>,
    projection: Vec<usize>,
    sheet: Vec<Sheet>,
    deck: Vec<usize>,
}

impl DoubleCover {
    pub fn new(base: &ElectricalNetwork, gauge: &GaugeField) -> Result<DoubleCover> {
        gauge.check(base)?;
        let id = |v: usize, s: Sheet| cover_vertex_id(base.vertex_id(v), s);
        let mut vertices = Vec::with_capacity(2 * base.num_vertices());
        let mut boundary = Vec::new();
        for v in 0..base.num_vertices() {
            for s in [Sheet::One, Sheet::Two] {
                vertices.push(id(v, s));
                if base.is_boundary(v) {
                    boundary.push(id(v, s));
                }
            }
        }
        let mut edges = Vec::with_capacity(2 * base.num_edges());
        for (k, e) in base.edges().iter().enumerate() {
            for (lift, ((a, sa), (b, sb))) in lift_edge(e.u, e.v, gauge.sign(k)).into_iter().enumerate() {
                edges.push(EdgeRecord {
                    id: Some(format!("({},{})", e.id, lift + 1)),
                    u: id(a, sa),
                    v: id(b, sb),
                    conductance: e.conductance,
                    sigma: None,
                });
            }
        }
        let file = NetworkFile { name: base.name().map(|n| format!("{n}^db")), vertices, boundary, edges };
        let (cover, _) = ElectricalNetwork::build(&file, false)?;

        let mut lifts = Vec::with_capacity(base.num_vertices());
        let mut projection = vec![0; cover.num_vertices()];
        let mut sheet = vec![Sheet::One; cover.num_vertices()];
        let mut deck = vec![0; cover.num_vertices()];
        for v in 0..base.num_vertices() {
            let one = cover.vertex_index(&id(v, Sheet::One))?;
            let two = cover.vertex_index(&id(v, Sheet::Two))?;
            lifts.push([one, two]);
            projection[one] = v;
            projection[two] = v;
            sheet[two] = Sheet::Two;
            deck[one] = two;
            deck[two] = one;
        }
        Ok(DoubleCover { base: base.clone(), gauge: gauge.clone(), cover, lifts, projection, sheet, deck })
    }

    pub fn base(&self) -> &ElectricalNetwork {
        &self.base
    }

    pub fn gauge(&self) -> &GaugeField {
        &self.gauge
    }

    pub fn network(&self) -> &ElectricalNetwork {
        &self.cover
    }

    /// Cover index of `(v, sheet)`.
    pub fn lift(&self, v: usize, sheet: Sheet) -> usize {
        self.lifts[v][sheet.index()]
    }

    pub fn project(&self, cover_vertex: usize) -> usize {
        self.projection[cover_vertex]
    }

    pub fn sheet(&self, cover_vertex: usize) -> Sheet {
        self.sheet[cover_vertex]
    }

    pub fn deck(&self, cover_vertex: usize) -> usize {
        self.deck[cover_vertex]
    }

    pub fn is_connected(&self) -> bool {
        let n = self.cover.num_vertices();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in self.cover.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == n
    }

    /// The unique lift of `path` starting on `start`. Returned as cover
    /// vertex indices.
    pub fn lift_path(&self, path: &DiscretePath, start: Sheet) -> Vec<usize> {
        let mut sheet = start;
        let mut out = Vec::with_capacity(path.vertices().len());
        out.push(self.lift(path.vertices()[0], sheet));
        for (&v, &e) in path.vertices()[1..].iter().zip(path.edges()) {
            sheet = sheet.across(self.gauge.sign(e));
            out.push(self.lift(v, sheet));
        }
        out
    }

    /// The sheet-1 copy of the base vertices, in base vertex order.
    pub fn fundamental_domain(&self) -> Vec<usize> {
        self.lifts.iter().map(|l| l[0]).collect()
    }

    pub fn to_json(&self) -> String {
        self.cover.to_json(None)
    }
}

/// Cover of σ and cover of σ̂·σ are isomorphic coverings: ψ_σ̂ maps
/// `(v, s)` to `(v, s)` when σ̂(v) = +1 and to `(v, other(s))` otherwise.
/// Returns the vertex bijection as cover indices (from `cover` to `target`),
/// after checking edge preservation and compatibility with the projections.
pub fn covering_isomorphism(cover: &DoubleCover, target: &DoubleCover, vs: &VertexSigns) -> Result<Vec<usize>> {
    let base = cover.base();
    if vs.len() != base.num_vertices() || target.base().num_vertices() != base.num_vertices() {
        return Err(Error::SizeMismatch { what: "vertices", expected: base.num_vertices(), found: vs.len() });
    }
    let expected = crate::gauge::apply_gauge_transform(base, vs, cover.gauge())?;
    if &expected != target.gauge() {
        return Err(Error::NotAGaugeTransform);
    }
    let map: Vec<usize> = (0..cover.network().num_vertices())
        .map(|c| {
            let v = cover.project(c);
            let s = match vs.sign(v) {
                Sign::Plus => cover.sheet(c),
                Sign::Minus => cover.sheet(c).other(),
            };
            target.lift(v, s)
        })
        .collect();
    let net = cover.network();
    let preserved = net.edges().iter().all(|e| {
        target
            .network()
            .edge_between(map[e.u], map[e.v])
            .is_some_and(|f| target.network().edge(f).conductance == e.conductance)
    });
    let projects = (0..map.len()).all(|c| target.project(map[c]) == cover.project(c));
    if !preserved || !projects || net.num_edges() != target.network().num_edges() {
        return Err(Error::NotAGaugeTransform);
    }
    Ok(map)
}
