//! Walk data: finite-support increment laws, partially homogeneous walk
//! specifications, and checks of the structural hypotheses.
//!
//! The quadrant Z₊² is split by the homogeneity depth `R` into four regions:
//!
//! ```text
//!   interior   x ≥ R, y ≥ R      law p∘
//!   boundary 1 x ≥ R, y < R      law p₁(y; ·)   (horizontal strip)
//!   boundary 2 x < R, y ≥ R      law p₂(x; ·)   (vertical strip)
//!   corner     x < R, y < R      one law per state
//! ```

use crate::linalg::{Mat2, Vec2};
use crate::rational::{self, format_prob, parse_prob, Prob};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("increment law is empty")]
    EmptyLaw,
    #[error("atom ({dx},{dy}) has non-positive probability {prob}")]
    NonPositiveProb { dx: i64, dy: i64, prob: String },
    #[error("atom ({dx},{dy}) listed twice")]
    DuplicateAtom { dx: i64, dy: i64 },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: String },
    #[error("homogeneity depth R must be positive")]
    ZeroDepth,
    #[error("{what}: expected {expected} laws, found {found}")]
    WrongLength { what: &'static str, expected: usize, found: usize },
    #[error("{law}: no atom keeps the walk inside the quadrant")]
    EmptyAfterClipping { law: String },
    #[error(transparent)]
    Parse(#[from] rational::ParseProbError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub dx: i64,
    pub dy: i64,
    pub prob: Prob,
}

/// A probability mass function with finite support on Z², stored exactly.
///
/// Atoms are kept sorted by `(dx, dy)`; this is also the canonical
/// serialization order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncrementLaw {
    atoms: Vec<Atom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl IncrementLaw {
    pub fn new(atoms: impl IntoIterator<Item = (i64, i64, Prob)>) -> Result<Self, ModelError> {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(dx, dy, prob)| Atom { dx, dy, prob })
            .collect();
        if atoms.is_empty() {
            return Err(ModelError::EmptyLaw);
        }
        atoms.sort_by_key(|a| (a.dx, a.dy));
        let mut sum = Prob::zero();
        for (i, a) in atoms.iter().enumerate() {
            if !a.prob.is_positive() {
                return Err(ModelError::NonPositiveProb {
                    dx: a.dx,
                    dy: a.dy,
                    prob: format_prob(&a.prob),
                });
            }
            if i > 0 && (atoms[i - 1].dx, atoms[i - 1].dy) == (a.dx, a.dy) {
                return Err(ModelError::DuplicateAtom { dx: a.dx, dy: a.dy });
            }
            sum += &a.prob;
        }
        if !rational::is_one(&sum) {
            return Err(ModelError::NotNormalized { sum: format_prob(&sum) });
        }
        Ok(Self { atoms })
    }

    /// Builds a law from possibly repeated atoms, summing their masses and
    /// dropping zero masses.
    pub fn from_merged(atoms: impl IntoIterator<Item = (i64, i64, Prob)>) -> Result<Self, ModelError> {
        let mut merged: BTreeMap<(i64, i64), Prob> = BTreeMap::new();
        for (dx, dy, p) in atoms {
            *merged.entry((dx, dy)).or_insert_with(Prob::zero) += p;
        }
        Self::new(
            merged
                .into_iter()
                .filter(|(_, p)| !p.is_zero())
                .map(|((dx, dy), p)| (dx, dy, p)),
        )
    }

    pub fn point_mass(dx: i64, dy: i64) -> Self {
        Self { atoms: vec![Atom { dx, dy, prob: rational::ratio(1, 1) }] }
    }

    /// Convenience constructor from `(dx, dy, numerator, denominator)` tuples.
    pub fn from_ratios(atoms: &[(i64, i64, i64, i64)]) -> Result<Self, ModelError> {
        Self::new(atoms.iter().map(|&(dx, dy, n, d)| (dx, dy, rational::ratio(n, d))))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean_exact(&self) -> (Prob, Prob) {
        let mut mx = Prob::zero();
        let mut my = Prob::zero();
        for a in &self.atoms {
            mx += &a.prob * rational::from_i64(a.dx);
            my += &a.prob * rational::from_i64(a.dy);
        }
        (mx, my)
    }

    /// Uncentred second moments `(E[dx²], E[dx·dy], E[dy²])`.
    pub fn second_moments_exact(&self) -> (Prob, Prob, Prob) {
        let mut xx = Prob::zero();
        let mut xy = Prob::zero();
        let mut yy = Prob::zero();
        for a in &self.atoms {
            xx += &a.prob * rational::from_i64(a.dx * a.dx);
            xy += &a.prob * rational::from_i64(a.dx * a.dy);
            yy += &a.prob * rational::from_i64(a.dy * a.dy);
        }
        (xx, xy, yy)
    }

    pub fn min_dx(&self) -> i64 {
        self.atoms.iter().map(|a| a.dx).min().unwrap_or(0)
    }

    pub fn min_dy(&self) -> i64 {
        self.atoms.iter().map(|a| a.dy).min().unwrap_or(0)
    }

    /// Largest coordinate displacement `max(|dx|, |dy|)` over the support.
    pub fn max_jump(&self) -> i64 {
        self.atoms.iter().map(|a| a.dx.abs().max(a.dy.abs())).max().unwrap_or(0)
    }

    /// Marginal law of one coordinate of the increment.
    pub fn marginal(&self, axis: Axis) -> BTreeMap<i64, Prob> {
        let mut m: BTreeMap<i64, Prob> = BTreeMap::new();
        for a in &self.atoms {
            let k = match axis {
                Axis::X => a.dx,
                Axis::Y => a.dy,
            };
            *m.entry(k).or_insert_with(Prob::zero) += &a.prob;
        }
        m
    }

    /// The law of the increment with coordinates exchanged.
    pub fn transposed(&self) -> Self {
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom { dx: a.dy, dy: a.dx, prob: a.prob.clone() })
            .collect();
        atoms.sort_by_key(|a| (a.dx, a.dy));
        Self { atoms }
    }

    /// Drops atoms that would take state `z` outside Z₊² and renormalizes.
    pub fn clipped_at(&self, z: (i64, i64), label: &str) -> Result<Self, ModelError> {
        let kept: Vec<&Atom> = self
            .atoms
            .iter()
            .filter(|a| z.0 + a.dx >= 0 && z.1 + a.dy >= 0)
            .collect();
        if kept.is_empty() {
            return Err(ModelError::EmptyAfterClipping { law: label.to_string() });
        }
        let total: Prob = kept.iter().fold(Prob::zero(), |s, a| s + &a.prob);
        Self::new(kept.into_iter().map(|a| (a.dx, a.dy, &a.prob / &total)))
    }
}

impl fmt::Display for IncrementLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({},{}):{}", a.dx, a.dy, format_prob(&a.prob))?;
        }
        write!(f, "}}")
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProbText {
    Text(String),
    Int(i64),
}

impl Serialize for IncrementLaw {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.atoms.len()))?;
        for a in &self.atoms {
            seq.serialize_element(&(a.dx, a.dy, format_prob(&a.prob)))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for IncrementLaw {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<(i64, i64, ProbText)> = Vec::deserialize(d)?;
        let mut atoms = Vec::with_capacity(raw.len());
        for (dx, dy, p) in raw {
            let prob = match p {
                ProbText::Text(t) => parse_prob(&t).map_err(serde::de::Error::custom)?,
                ProbText::Int(i) => rational::from_i64(i),
            };
            atoms.push((dx, dy, prob));
        }
        IncrementLaw::new(atoms).map_err(serde::de::Error::custom)
    }
}

/// Mean increment, computed exactly and then rounded.
pub fn interior_mean(law: &IncrementLaw) -> Vec2 {
    let (mx, my) = law.mean_exact();
    Vec2::new(rational::to_f64(&mx), rational::to_f64(&my))
}

/// Second-moment matrix `Σ p(z) z zᵀ` of a law. Under zero drift this is
/// the covariance.
pub fn covariance(law: &IncrementLaw) -> Mat2 {
    let (xx, xy, yy) = law.second_moments_exact();
    let xy = rational::to_f64(&xy);
    Mat2::new(rational::to_f64(&xx), xy, xy, rational::to_f64(&yy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    Boundary1,
    Boundary2,
    Corner,
}

/// Boundary index: 1 for the horizontal strip `y < R`, 2 for the vertical
/// strip `x < R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Side {
    pub fn from_index(k: u8) -> Option<Side> {
        match k {
            1 => Some(Side::One),
            2 => Some(Side::Two),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Side::One => 1,
            Side::Two => 2,
        }
    }

    pub fn region(self) -> Region {
        match self {
            Side::One => Region::Boundary1,
            Side::Two => Region::Boundary2,
        }
    }
}

/// A partially homogeneous walk on Z₊².
///
/// `corner` is stored flat with index `x * R + y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkSpec {
    r: usize,
    interior: IncrementLaw,
    horizontal: Vec<IncrementLaw>,
    vertical: Vec<IncrementLaw>,
    corner: Vec<IncrementLaw>,
}

impl WalkSpec {
    pub fn new(
        r: usize,
        interior: IncrementLaw,
        horizontal: Vec<IncrementLaw>,
        vertical: Vec<IncrementLaw>,
        corner: Vec<IncrementLaw>,
    ) -> Result<Self, ModelError> {
        if r == 0 {
            return Err(ModelError::ZeroDepth);
        }
        let check = |what, found: usize, expected| {
            if found == expected {
                Ok(())
            } else {
                Err(ModelError::WrongLength { what, expected, found })
            }
        };
        check("horizontal", horizontal.len(), r)?;
        check("vertical", vertical.len(), r)?;
        check("corner", corner.len(), r * r)?;
        Ok(Self { r, interior, horizontal, vertical, corner })
    }

    /// Builds a spec whose corner laws reuse the nearest boundary law,
    /// clipped to the quadrant and renormalized. The horizontal law is used
    /// when `x ≥ y`, the vertical one otherwise.
    pub fn with_default_corners(
        r: usize,
        interior: IncrementLaw,
        horizontal: Vec<IncrementLaw>,
        vertical: Vec<IncrementLaw>,
    ) -> Result<Self, ModelError> {
        if r == 0 {
            return Err(ModelError::ZeroDepth);
        }
        if horizontal.len() != r || vertical.len() != r {
            return Err(ModelError::WrongLength {
                what: if horizontal.len() != r { "horizontal" } else { "vertical" },
                expected: r,
                found: if horizontal.len() != r { horizontal.len() } else { vertical.len() },
            });
        }
        let mut corner = Vec::with_capacity(r * r);
        for x in 0..r {
            for y in 0..r {
                let (base, label) = if x >= y {
                    (&horizontal[y], format!("corner[{x},{y}] from horizontal[{y}]"))
                } else {
                    (&vertical[x], format!("corner[{x},{y}] from vertical[{x}]"))
                };
                corner.push(base.clipped_at((x as i64, y as i64), &label)?);
            }
        }
        Self::new(r, interior, horizontal, vertical, corner)
    }

    pub fn depth(&self) -> usize {
        self.r
    }

    pub fn interior(&self) -> &IncrementLaw {
        &self.interior
    }

    pub fn horizontal(&self) -> &[IncrementLaw] {
        &self.horizontal
    }

    pub fn vertical(&self) -> &[IncrementLaw] {
        &self.vertical
    }

    pub fn corner(&self, x: usize, y: usize) -> &IncrementLaw {
        &self.corner[x * self.r + y]
    }

    pub fn corners(&self) -> &[IncrementLaw] {
        &self.corner
    }

    /// Boundary law `p_k(i; ·)`.
    pub fn boundary(&self, side: Side, i: usize) -> &IncrementLaw {
        match side {
            Side::One => &self.horizontal[i],
            Side::Two => &self.vertical[i],
        }
    }

    pub fn region(&self, z: (i64, i64)) -> Region {
        let r = self.r as i64;
        match (z.0 >= r, z.1 >= r) {
            (true, true) => Region::Interior,
            (true, false) => Region::Boundary1,
            (false, true) => Region::Boundary2,
            (false, false) => Region::Corner,
        }
    }

    /// The one-step increment law at state `z ∈ Z₊²`.
    pub fn law_at(&self, z: (i64, i64)) -> &IncrementLaw {
        match self.region(z) {
            Region::Interior => &self.interior,
            Region::Boundary1 => &self.horizontal[z.1 as usize],
            Region::Boundary2 => &self.vertical[z.0 as usize],
            Region::Corner => self.corner(z.0 as usize, z.1 as usize),
        }
    }

    /// Largest coordinate displacement of any atom in any law.
    pub fn max_jump(&self) -> i64 {
        std::iter::once(&self.interior)
            .chain(&self.horizontal)
            .chain(&self.vertical)
            .chain(&self.corner)
            .map(IncrementLaw::max_jump)
            .max()
            .unwrap_or(0)
    }

    /// The mirror image of the walk under `(x, y) ↦ (y, x)`.
    pub fn transposed(&self) -> Self {
        let r = self.r;
        let mut corner = Vec::with_capacity(r * r);
        for x in 0..r {
            for y in 0..r {
                corner.push(self.corner(y, x).transposed());
            }
        }
        Self {
            r,
            interior: self.interior.transposed(),
            horizontal: self.vertical.iter().map(IncrementLaw::transposed).collect(),
            vertical: self.horizontal.iter().map(IncrementLaw::transposed).collect(),
            corner,
        }
    }

    /// Interior laws satisfy `dx ≥ −1` and `dy ≥ −1`.
    pub fn is_left_continuous(&self) -> bool {
        self.interior.min_dx() >= -1 && self.interior.min_dy() >= -1
    }

    /// Every `(state, atom)` pair in the box `[0, side]²` whose target leaves
    /// Z₊².
    pub fn escaping_atoms(&self, side: i64) -> Vec<((i64, i64), (i64, i64))> {
        let mut out = Vec::new();
        for x in 0..=side {
            for y in 0..=side {
                for a in self.law_at((x, y)).atoms() {
                    if x + a.dx < 0 || y + a.dy < 0 {
                        out.push(((x, y), (a.dx, a.dy)));
                    }
                }
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct WalkSpecFile {
    #[serde(rename = "R")]
    r: usize,
    interior: IncrementLaw,
    horizontal: Vec<IncrementLaw>,
    vertical: Vec<IncrementLaw>,
    corner: Vec<IncrementLaw>,
}

impl Serialize for WalkSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WalkSpecFile {
            r: self.r,
            interior: self.interior.clone(),
            horizontal: self.horizontal.clone(),
            vertical: self.vertical.clone(),
            corner: self.corner.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WalkSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = WalkSpecFile::deserialize(d)?;
        WalkSpec::new(f.r, f.interior, f.horizontal, f.vertical, f.corner)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffendingAtom {
    pub law: String,
    pub dx: i64,
    pub dy: i64,
    /// The bound the atom violates, e.g. `"dx >= -1"`.
    pub bound: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityCheck {
    pub pass: bool,
    pub offending: Vec<OffendingAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftCheck {
    pub pass: bool,
    pub drift: Vec2,
    /// Exact drift as rational strings `[x, y]`.
    pub drift_exact: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceCheck {
    pub pass: bool,
    pub sigma: Mat2,
    pub det: f64,
    pub det_exact: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrreducibilityStatus {
    VerifiedOnTruncation,
    NotVerified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IrreducibilityCheck {
    pub status: IrreducibilityStatus,
    pub truncation: usize,
    /// Which half of the hypothesis failed (1: paths avoiding boundary 2
    /// and the corner; 2: paths avoiding boundary 1 and the corner).
    pub failed_part: Option<u8>,
    /// A state in the truncation box that does not communicate with `(R, R)`.
    pub witness: Option<(i64, i64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentExponents {
    pub nu_interior: f64,
    pub nu1: f64,
    pub nu2: f64,
}

impl Serialize for MomentExponents {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let show = |v: f64| if v.is_infinite() { "inf".to_string() } else { v.to_string() };
        let mut st = s.serialize_struct("MomentExponents", 3)?;
        st.serialize_field("nu_interior", &show(self.nu_interior))?;
        st.serialize_field("nu1", &show(self.nu1))?;
        st.serialize_field("nu2", &show(self.nu2))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub hypothesis_h: HomogeneityCheck,
    pub zero_drift_d: DriftCheck,
    pub covariance_sigma: CovarianceCheck,
    pub irreducibility_i: IrreducibilityCheck,
    pub moment_exponents: MomentExponents,
    pub left_continuous: bool,
}

impl ValidationReport {
    /// Partial homogeneity, zero drift and full-rank covariance all hold.
    /// Irreducibility failures are warnings only.
    pub fn hard_pass(&self) -> bool {
        self.hypothesis_h.pass && self.zero_drift_d.pass && self.covariance_sigma.pass
    }
}

/// Default side of the irreducibility truncation box.
pub fn default_truncation(spec: &WalkSpec) -> usize {
    8 * spec.depth()
}

pub fn validate(spec: &WalkSpec, trunc: usize) -> ValidationReport {
    let r = spec.depth() as i64;
    let mut offending = Vec::new();
    let mut check = |law: &IncrementLaw, label: String, min_x: i64, min_y: i64| {
        for a in law.atoms() {
            if a.dx < min_x {
                offending.push(OffendingAtom {
                    law: label.clone(),
                    dx: a.dx,
                    dy: a.dy,
                    bound: format!("dx >= {min_x}"),
                });
            } else if a.dy < min_y {
                offending.push(OffendingAtom {
                    law: label.clone(),
                    dx: a.dx,
                    dy: a.dy,
                    bound: format!("dy >= {min_y}"),
                });
            }
        }
    };
    check(spec.interior(), "interior".into(), -r, -r);
    for (y, law) in spec.horizontal().iter().enumerate() {
        check(law, format!("horizontal[{y}]"), -r, -(y as i64));
    }
    for (x, law) in spec.vertical().iter().enumerate() {
        check(law, format!("vertical[{x}]"), -(x as i64), -r);
    }
    for x in 0..spec.depth() {
        for y in 0..spec.depth() {
            check(spec.corner(x, y), format!("corner[{x},{y}]"), -(x as i64), -(y as i64));
        }
    }
    let hypothesis_h = HomogeneityCheck { pass: offending.is_empty(), offending };

    let (mx, my) = spec.interior().mean_exact();
    let zero_drift_d = DriftCheck {
        pass: mx.is_zero() && my.is_zero(),
        drift: Vec2::new(rational::to_f64(&mx), rational::to_f64(&my)),
        drift_exact: [format_prob(&mx), format_prob(&my)],
    };

    let (xx, xy, yy) = spec.interior().second_moments_exact();
    let det_exact = &xx * &yy - &xy * &xy;
    let covariance_sigma = CovarianceCheck {
        pass: xx.is_positive() && det_exact.is_positive(),
        sigma: covariance(spec.interior()),
        det: rational::to_f64(&det_exact),
        det_exact: format_prob(&det_exact),
    };

    let irreducibility_i = check_irreducibility(spec, trunc);
    let inf = f64::INFINITY;
    ValidationReport {
        hypothesis_h,
        zero_drift_d,
        covariance_sigma,
        irreducibility_i,
        moment_exponents: MomentExponents { nu_interior: inf, nu1: inf, nu2: inf },
        left_continuous: spec.is_left_continuous(),
    }
}

fn check_irreducibility(spec: &WalkSpec, trunc: usize) -> IrreducibilityCheck {
    for side in [Side::One, Side::Two] {
        if let Some(w) = unreachable_state(spec, trunc as i64, side) {
            return IrreducibilityCheck {
                status: IrreducibilityStatus::NotVerified,
                truncation: trunc,
                failed_part: Some(side.index()),
                witness: Some(w),
            };
        }
    }
    IrreducibilityCheck {
        status: IrreducibilityStatus::VerifiedOnTruncation,
        truncation: trunc,
        failed_part: None,
        witness: None,
    }
}

/// Breadth-first search in both directions from `(R, R)` through states in
/// the interior or on boundary `side`. Paths may use a margin beyond the box
/// so that states near the box edge are not spuriously cut off. Returns the
/// first box state that fails to communicate with `(R, R)`.
fn unreachable_state(spec: &WalkSpec, trunc: i64, side: Side) -> Option<(i64, i64)> {
    let r = spec.depth() as i64;
    let trunc = trunc.max(r);
    let outer = trunc + 2 * spec.max_jump() + r;
    let width = (outer + 1) as usize;
    let allowed = |z: (i64, i64)| {
        let in_box = (0..=outer).contains(&z.0) && (0..=outer).contains(&z.1);
        in_box && {
            let region = spec.region(z);
            region == Region::Interior || region == side.region()
        }
    };
    let idx = |z: (i64, i64)| z.0 as usize * width + z.1 as usize;
    let mut fwd: Vec<Vec<usize>> = vec![Vec::new(); width * width];
    let mut bwd: Vec<Vec<usize>> = vec![Vec::new(); width * width];
    for x in 0..=outer {
        for y in 0..=outer {
            let z = (x, y);
            if !allowed(z) {
                continue;
            }
            for a in spec.law_at(z).atoms() {
                let w = (x + a.dx, y + a.dy);
                if allowed(w) {
                    fwd[idx(z)].push(idx(w));
                    bwd[idx(w)].push(idx(z));
                }
            }
        }
    }
    let bfs = |adj: &Vec<Vec<usize>>| {
        let mut seen = vec![false; width * width];
        let start = idx((r, r));
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    let reach_fwd = bfs(&fwd);
    let reach_bwd = bfs(&bwd);
    for x in 0..=trunc {
        for y in 0..=trunc {
            let z = (x, y);
            if allowed(z) && !(reach_fwd[idx(z)] && reach_bwd[idx(z)]) {
                return Some(z);
            }
        }
    }
    None
}
