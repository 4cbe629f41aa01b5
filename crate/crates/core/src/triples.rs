//! Spectral triple containers and the checks that apply to any triple:
//! axioms, real-structure signs, order conditions, non-degeneracy,
//! irreducibility, equivariance, the bounded transform and summability sums.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::groups::{self, GroupHopfData, GroupModel, StarConvention, Weight};
use crate::opalg::{
    commutator, hermitian_eigen, hermitian_eigenvalues, relation_residual, span_coordinates, ComplexOperator,
    HilbertSpace, Tolerance, C64, ZERO,
};
use crate::report::CheckRecord;

/// Group unitaries `g -> u_g` on the triple's Hilbert space.
#[derive(Clone, Debug)]
pub struct Unitaries {
    group: GroupModel,
    ops: Vec<ComplexOperator>,
}

impl Unitaries {
    /// Requires one linear unitary per group element.
    pub fn new(group: &GroupModel, ops: Vec<ComplexOperator>) -> Result<Self> {
        if ops.len() != group.order() {
            return Err(Error::InvalidTriple(format!(
                "{} unitaries for a group of order {}",
                ops.len(),
                group.order()
            )));
        }
        for (g, u) in ops.iter().enumerate() {
            if u.is_antilinear() {
                return Err(Error::InvalidTriple(format!("u_{} is antilinear", group.label(g))));
            }
            if u.dim() != ops[0].dim() {
                return Err(Error::SpaceMismatch { left: ops[0].dim(), right: u.dim() });
            }
            let r = u.unitarity_residual();
            if r > 1e-9 {
                return Err(Error::InvalidTriple(format!("u_{} is not unitary (residual {r:e})", group.label(g))));
            }
        }
        Ok(Self { group: group.clone(), ops })
    }

    pub fn trivial(group: &GroupModel, dim: usize) -> Result<Self> {
        let id = ComplexOperator::identity(dim)?;
        Self::new(group, vec![id; group.order()])
    }

    /// `u_g = e^{iθk}·1`, with `k` the integer of `g` (windowed) or its index (finite).
    pub fn phase(group: &GroupModel, dim: usize, theta: f64) -> Result<Self> {
        let id = ComplexOperator::identity(dim)?;
        let ops = (0..group.order())
            .map(|g| {
                let k = group.integer(g).unwrap_or(g as i64) as f64;
                id.scale(C64::from_polar(1.0, theta * k))
            })
            .collect();
        Self::new(group, ops)
    }

    /// `u_g δ_k = e^{iθgk} δ_k` on `ℓ²` of a windowed site group.
    pub fn rotation(group: &GroupModel, site: &GroupModel, theta: f64) -> Result<Self> {
        group.window().ok_or(Error::NotWindowed)?;
        site.window().ok_or(Error::NotWindowed)?;
        let ops = (0..group.order())
            .map(|g| {
                let a = group.integer(g).expect("windowed") as f64;
                let diag: Vec<C64> = (0..site.order())
                    .map(|k| C64::from_polar(1.0, theta * a * site.integer(k).expect("windowed") as f64))
                    .collect();
                ComplexOperator::diagonal(&diag)
            })
            .collect::<Result<_>>()?;
        Self::new(group, ops)
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn get(&self, g: usize) -> &ComplexOperator {
        &self.ops[g]
    }

    pub fn ops(&self) -> &[ComplexOperator] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    /// `α_g(a) = u_g a u_g*`.
    pub fn alpha(&self, g: usize, a: &ComplexOperator) -> ComplexOperator {
        conjugate(&self.ops[g], a)
    }
}

/// `u a u⁻¹` for a unitary or antiunitary `u`.
pub fn conjugate(u: &ComplexOperator, a: &ComplexOperator) -> ComplexOperator {
    &(u * a) * &u.adjoint()
}

#[derive(Clone, Debug)]
pub struct SpectralTripleData {
    space: HilbertSpace,
    algebra_basis: Vec<ComplexOperator>,
    basis_labels: Vec<String>,
    dirac: ComplexOperator,
    grading: Option<ComplexOperator>,
    real: Option<ComplexOperator>,
    unitaries: Option<Unitaries>,
    weight: Option<Weight>,
    site_group: Option<GroupModel>,
    windowed: bool,
    tolerance: Tolerance,
}

impl SpectralTripleData {
    /// `D` must be self-adjoint; basis operators must be linear and live on `D`'s space.
    pub fn new(dirac: ComplexOperator, algebra_basis: Vec<ComplexOperator>, tolerance: Tolerance) -> Result<Self> {
        if dirac.is_antilinear() {
            return Err(Error::InvalidTriple("D is antilinear".into()));
        }
        if algebra_basis.is_empty() {
            return Err(Error::InvalidTriple("empty algebra basis".into()));
        }
        for a in &algebra_basis {
            if a.dim() != dirac.dim() {
                return Err(Error::SpaceMismatch { left: dirac.dim(), right: a.dim() });
            }
            if a.is_antilinear() {
                return Err(Error::InvalidTriple("algebra element is antilinear".into()));
            }
        }
        let r = relation_residual(&dirac, &dirac.adjoint(), None)?;
        if !tolerance.accepts(r, dirac.max_abs()) {
            return Err(Error::InvalidTriple(format!("D is not self-adjoint (residual {r:e})")));
        }
        let basis_labels = (0..algebra_basis.len()).map(|i| format!("a{i}")).collect();
        Ok(Self {
            space: dirac.space().clone(),
            algebra_basis,
            basis_labels,
            dirac,
            grading: None,
            real: None,
            unitaries: None,
            weight: None,
            site_group: None,
            windowed: false,
            tolerance,
        })
    }

    pub fn with_basis_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.algebra_basis.len() {
            return Err(Error::InvalidTriple("label count differs from basis size".into()));
        }
        self.basis_labels = labels;
        Ok(self)
    }

    /// Validates `χ = χ*`, `χ² = 1`, `χD = −Dχ` and `[χ, a] = 0`.
    pub fn with_grading(mut self, chi: ComplexOperator) -> Result<Self> {
        if chi.dim() != self.dim() || chi.is_antilinear() {
            return Err(Error::InvalidTriple("grading must be linear on the triple's space".into()));
        }
        let tol = self.tolerance;
        let id = ComplexOperator::identity(self.dim())?;
        let checks = [
            ("χ = χ*", relation_residual(&chi, &chi.adjoint(), None)?, 1.0),
            ("χ² = 1", relation_residual(&(&chi * &chi), &id, None)?, 1.0),
            ("χD = −Dχ", commutator(&chi, &self.dirac, true)?.max_abs(), self.dirac.max_abs()),
        ];
        for (what, r, scale) in checks {
            if !tol.accepts(r, scale) {
                return Err(Error::InvalidTriple(format!("grading fails {what} (residual {r:e})")));
            }
        }
        for (i, a) in self.algebra_basis.iter().enumerate() {
            let r = commutator(&chi, a, false)?.max_abs();
            if !tol.accepts(r, a.max_abs()) {
                return Err(Error::InvalidTriple(format!("grading does not commute with basis {i} (residual {r:e})")));
            }
        }
        self.grading = Some(chi);
        Ok(self)
    }

    /// `J` must be antilinear with a unitary matrix part.
    pub fn with_real_structure(mut self, j: ComplexOperator) -> Result<Self> {
        if j.dim() != self.dim() {
            return Err(Error::SpaceMismatch { left: self.dim(), right: j.dim() });
        }
        if !j.is_antilinear() {
            return Err(Error::InvalidTriple("J must be antilinear".into()));
        }
        let r = j.unitarity_residual();
        if !self.tolerance.accepts(r, 1.0) {
            return Err(Error::InvalidTriple(format!("J is not isometric (residual {r:e})")));
        }
        self.real = Some(j);
        Ok(self)
    }

    pub fn with_unitaries(mut self, u: Unitaries) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::SpaceMismatch { left: self.dim(), right: u.dim() });
        }
        self.unitaries = Some(u);
        Ok(self)
    }

    pub fn with_weight(mut self, w: Weight) -> Self {
        self.weight = Some(w);
        self
    }

    /// Records that `H = ℓ²(site)`, so interior windows can be formed.
    pub fn with_site_group(mut self, g: GroupModel) -> Result<Self> {
        if g.order() != self.dim() {
            return Err(Error::SpaceMismatch { left: self.dim(), right: g.order() });
        }
        self.windowed = g.window().is_some();
        self.site_group = Some(g);
        Ok(self)
    }

    pub fn with_tolerance(mut self, t: Tolerance) -> Self {
        self.tolerance = t;
        self
    }

    pub fn without_real_structure(mut self) -> Self {
        self.real = None;
        self
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn algebra_basis(&self) -> &[ComplexOperator] {
        &self.algebra_basis
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub fn dirac(&self) -> &ComplexOperator {
        &self.dirac
    }

    pub fn grading(&self) -> Option<&ComplexOperator> {
        self.grading.as_ref()
    }

    pub fn real_structure(&self) -> Option<&ComplexOperator> {
        self.real.as_ref()
    }

    pub fn unitaries(&self) -> Option<&Unitaries> {
        self.unitaries.as_ref()
    }

    pub fn weight(&self) -> Option<&Weight> {
        self.weight.as_ref()
    }

    pub fn site_group(&self) -> Option<&GroupModel> {
        self.site_group.as_ref()
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    pub fn is_even(&self) -> bool {
        self.grading.is_some()
    }

    /// True when `H` involves a windowed `ℓ²(ℤ)`, where only interior identities are meaningful.
    pub fn is_windowed(&self) -> bool {
        self.windowed
    }

    /// Marks a triple built on a compressed space without a single site group.
    pub fn mark_windowed(mut self, windowed: bool) -> Self {
        self.windowed = windowed;
        self
    }

    /// Interior projection of the site group, or the identity.
    pub fn interior(&self, margin: usize) -> Result<ComplexOperator> {
        match &self.site_group {
            Some(g) => groups::interior_projection(g, margin),
            None => ComplexOperator::identity(self.dim()),
        }
    }

    /// The footnoted alternative `J′ = Jχ`, with signs `(εε″, −ε′, ε″)`.
    pub fn alternative_real_structure(&self) -> Result<Self> {
        let j = self.real.as_ref().ok_or(Error::MissingJ)?;
        let chi = self.grading.as_ref().ok_or_else(|| Error::InvalidTriple("J′ = Jχ needs a grading".into()))?;
        self.clone().with_real_structure(j * chi)
    }
}

/// The triple `(ℂG, ℓ²(G), M_l)` with `J = J_G`. The algebra basis is
/// `{λ_g : |g| <= radius}`; `None` takes every element.
pub fn group_triple(group: &GroupModel, weight: &Weight, radius: Option<usize>, tolerance: Tolerance) -> Result<SpectralTripleData> {
    let ops = groups::build_group_operators(group, weight)?;
    let elements = match radius {
        Some(r) => group.ball(r),
        None => group.elements_by_length(),
    };
    let basis = elements.iter().map(|&g| ops.lambda[g].clone()).collect();
    let labels = elements.iter().map(|&g| format!("λ_{}", group.label(g))).collect();
    let space = HilbertSpace::with_labels(group.labels())?;
    SpectralTripleData::new(ops.m_l.with_space(space)?, basis, tolerance)?
        .with_basis_labels(labels)?
        .with_real_structure(ops.j_g)?
        .with_site_group(group.clone())
        .map(|t| t.with_weight(weight.clone()))
}

pub const AXIOM_ANCHOR: &str = "spectral triple: D = D*, bounded [D, π(a)], compact resolvent";
pub const GRADING_ANCHOR: &str = "even triple: χ = χ*, χ² = 1, χD = −Dχ, [χ, π(a)] = 0";
pub const REAL_ANCHOR: &str = "real structure: J² = ε, JD = ε′DJ, Jχ = ε″χJ";
pub const ZEROTH_ANCHOR: &str = "zeroth order: [π(a), Jπ(b)J⁻¹] = 0";
pub const FIRST_ANCHOR: &str = "first order: [[D, π(a)], Jπ(b)J⁻¹] = 0";
pub const SECOND_ANCHOR: &str = "second order: [[D, π(a)], J[D, π(b)]J⁻¹] = 0";

fn windowed(op: &ComplexOperator, window: &ComplexOperator) -> Result<f64> {
    Ok(op.compress(window)?.max_abs())
}

/// Axiom residuals. Boundedness and compact resolvent hold trivially in finite
/// dimension and are reported as such.
pub fn verify_axioms(t: &SpectralTripleData, window: &ComplexOperator) -> Result<Vec<CheckRecord>> {
    let tol = t.tolerance;
    let thr = |scale: f64| tol.threshold(scale);
    let d = &t.dirac;
    let mut out = Vec::new();
    out.push(CheckRecord::residual(
        "axioms.dirac_selfadjoint",
        AXIOM_ANCHOR,
        relation_residual(d, &d.adjoint(), Some(window))?,
        thr(d.max_abs()),
    ));
    out.push(
        CheckRecord::flag("axioms.finite_scale", AXIOM_ANCHOR, true)
            .report_only()
            .with_detail("finite-scale: bounded commutators and compact resolvent trivially satisfied"),
    );
    if let Some(chi) = &t.grading {
        let id = ComplexOperator::identity(t.dim())?;
        out.push(CheckRecord::residual(
            "axioms.grading_selfadjoint",
            GRADING_ANCHOR,
            relation_residual(chi, &chi.adjoint(), Some(window))?,
            thr(1.0),
        ));
        out.push(CheckRecord::residual(
            "axioms.grading_involution",
            GRADING_ANCHOR,
            relation_residual(&(chi * chi), &id, Some(window))?,
            thr(1.0),
        ));
        out.push(CheckRecord::residual(
            "axioms.grading_anticommutes",
            GRADING_ANCHOR,
            windowed(&commutator(chi, d, true)?, window)?,
            thr(d.max_abs()),
        ));
        let mut worst = (0.0, None);
        for (i, a) in t.algebra_basis.iter().enumerate() {
            let r = windowed(&commutator(chi, a, false)?, window)?;
            if r > worst.0 {
                worst = (r, Some(t.basis_labels[i].clone()));
            }
        }
        out.push(
            CheckRecord::residual("axioms.grading_commutes_with_algebra", GRADING_ANCHOR, worst.0, thr(1.0))
                .with_optional_witness(worst.1),
        );
    }
    out.extend(check_algebra_closure(t, window)?);
    if let Some(j) = &t.real {
        out.push(CheckRecord::residual("axioms.j_isometric", REAL_ANCHOR, j.unitarity_residual(), thr(1.0)));
    }
    Ok(out)
}

/// Unit, *-closure and product closure of the algebra basis by least squares.
/// On windowed fixtures the basis is a generating set, so product closure is
/// recorded but does not gate the run.
pub fn check_algebra_closure(t: &SpectralTripleData, window: &ComplexOperator) -> Result<Vec<CheckRecord>> {
    let anchor = "π(𝒜) is a unital *-algebra";
    let basis = &t.algebra_basis;
    let thr = t.tolerance.threshold(1.0);
    let id = ComplexOperator::identity(t.dim())?;
    let (_, unit) = span_coordinates(basis, &id, Some(window))?;
    let mut star = (0.0, None);
    for (i, a) in basis.iter().enumerate() {
        let (_, r) = span_coordinates(basis, &a.adjoint(), Some(window))?;
        if r > star.0 {
            star = (r, Some(t.basis_labels[i].clone()));
        }
    }
    let mut prod = (0.0, None);
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let (_, r) = span_coordinates(basis, &(a * b), Some(window))?;
            if r > prod.0 {
                prod = (r, Some(format!("({}, {})", t.basis_labels[i], t.basis_labels[j])));
            }
        }
    }
    let mut product = CheckRecord::residual("axioms.product_closure", anchor, prod.0, thr).with_optional_witness(prod.1);
    if t.is_windowed() {
        product = product.report_only().with_detail("windowed basis is a generating set");
    }
    Ok(vec![
        CheckRecord::residual("axioms.unit_in_span", anchor, unit, thr),
        CheckRecord::residual("axioms.star_closure", anchor, star.0, thr).with_optional_witness(star.1),
        product,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    Undetermined,
}

impl Sign {
    pub fn value(self) -> Option<i8> {
        match self {
            Sign::Plus => Some(1),
            Sign::Minus => Some(-1),
            Sign::Undetermined => None,
        }
    }

    fn matches(self, s: i8) -> bool {
        self.value().is_none_or(|v| v == s)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
            Sign::Undetermined => "undetermined",
        })
    }
}

/// `(ε, ε′, ε″)` for KO-dimensions 0..7; `ε″` is absent in odd dimensions.
pub const KO_TABLE: [(i8, i8, Option<i8>); 8] = [
    (1, 1, Some(1)),
    (1, -1, None),
    (-1, 1, Some(-1)),
    (-1, 1, None),
    (-1, 1, Some(1)),
    (-1, -1, None),
    (1, 1, Some(-1)),
    (1, 1, None),
];

/// KO-dimensions consistent with the given signs.
pub fn ko_dimensions(eps: Sign, eps_prime: Sign, eps_dprime: Option<Sign>) -> Vec<u8> {
    (0u8..8)
        .filter(|&n| {
            let (e, ep, edp) = KO_TABLE[n as usize];
            let dprime_ok = match (eps_dprime, edp) {
                (None, None) => true,
                (Some(s), Some(v)) => s.matches(v),
                _ => false,
            };
            eps.matches(e) && eps_prime.matches(ep) && dprime_ok
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignTriple {
    pub eps: Sign,
    pub eps_prime: Sign,
    /// `None` when the triple has no grading.
    pub eps_dprime: Option<Sign>,
    pub ko_dims: Vec<u8>,
    /// `(residual for +1, residual for −1)` per sign.
    pub residuals: Vec<(f64, f64)>,
}

impl SignTriple {
    /// The KO-dimension when it is unique.
    pub fn ko(&self) -> Option<u8> {
        (self.ko_dims.len() == 1).then(|| self.ko_dims[0])
    }

    /// Largest residual of the selected signs.
    pub fn max_selected_residual(&self) -> f64 {
        let signs = [Some(self.eps), Some(self.eps_prime), self.eps_dprime];
        signs
            .iter()
            .zip(&self.residuals)
            .map(|(s, (p, m))| match s {
                Some(Sign::Plus) => *p,
                Some(Sign::Minus) => *m,
                _ => p.min(*m),
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for SignTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ε, ε′, ε″) = ({}, {}, ", self.eps, self.eps_prime)?;
        match self.eps_dprime {
            Some(s) => write!(f, "{s}")?,
            None => write!(f, "absent")?,
        }
        write!(f, ") -> KO {:?}", self.ko_dims)
    }
}

fn pick_sign(name: &str, plus: f64, minus: f64, threshold: f64) -> Result<Sign> {
    match (plus <= threshold, minus <= threshold) {
        (true, true) => Ok(Sign::Undetermined),
        (true, false) => Ok(Sign::Plus),
        (false, true) => Ok(Sign::Minus),
        (false, false) => Err(Error::SignsNotInTable(format!(
            "{name}: neither sign holds (residuals {plus:e} for +1, {minus:e} for −1)"
        ))),
    }
}

/// Zeroth order over all basis pairs, then each sign by comparing the
/// residuals of both candidate relations.
pub fn classify_real_structure(t: &SpectralTripleData, window: &ComplexOperator) -> Result<SignTriple> {
    let j = t.real.as_ref().ok_or(Error::NoRealStructure)?;
    let tol = t.tolerance;
    let jinv = j.adjoint();
    let conj: Vec<ComplexOperator> = t.algebra_basis.iter().map(|b| &(j * b) * &jinv).collect();
    for (ia, a) in t.algebra_basis.iter().enumerate() {
        for (ib, jb) in conj.iter().enumerate() {
            let r = windowed(&commutator(a, jb, false)?, window)?;
            if !tol.accepts(r, 1.0) {
                return Err(Error::ZerothOrderViolation { a: ia, b: ib, residual: r });
            }
        }
    }
    let id = ComplexOperator::identity(t.dim())?;
    let jj = j * j;
    let e_plus = relation_residual(&jj, &id, Some(window))?;
    let e_minus = relation_residual(&jj, &(-&id), Some(window))?;
    let eps = pick_sign("ε", e_plus, e_minus, tol.threshold(1.0))?;

    let d = &t.dirac;
    let dj = d * j;
    let jd = j * d;
    let p_plus = relation_residual(&dj, &jd, Some(window))?;
    let p_minus = relation_residual(&dj, &(-&jd), Some(window))?;
    let eps_prime = pick_sign("ε′", p_plus, p_minus, tol.threshold(d.max_abs()))?;

    let mut residuals = vec![(e_plus, e_minus), (p_plus, p_minus)];
    let eps_dprime = match &t.grading {
        None => None,
        Some(chi) => {
            let cj = chi * j;
            let jc = j * chi;
            let plus = relation_residual(&cj, &jc, Some(window))?;
            let minus = relation_residual(&cj, &(-&jc), Some(window))?;
            residuals.push((plus, minus));
            Some(pick_sign("ε″", plus, minus, tol.threshold(1.0))?)
        }
    };
    // Signs outside the table (possible for J′ = Jχ) leave ko_dims empty.
    let ko_dims = ko_dimensions(eps, eps_prime, eps_dprime);
    Ok(SignTriple { eps, eps_prime, eps_dprime, ko_dims, residuals })
}

/// Residuals of the zeroth, first or second order condition over all basis pairs.
#[derive(Clone, Debug)]
pub struct OrderOutcome {
    pub order: u8,
    pub max_residual: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// Pairs whose residual exceeds the threshold.
    pub failing: Vec<(usize, usize, f64)>,
    pub threshold: f64,
}

impl OrderOutcome {
    pub fn passed(&self) -> bool {
        self.failing.is_empty()
    }
}

pub fn order_condition(t: &SpectralTripleData, order: u8, window: &ComplexOperator) -> Result<OrderOutcome> {
    let j = t.real.as_ref().ok_or(Error::MissingJ)?;
    if order > 2 {
        return Err(Error::InvalidTriple(format!("order {order} is not 0, 1 or 2")));
    }
    let jinv = j.adjoint();
    let d = &t.dirac;
    let basis = &t.algebra_basis;
    let comm_d: Vec<ComplexOperator> = basis.iter().map(|a| commutator(d, a, false)).collect::<Result<_>>()?;
    let left: &[ComplexOperator] = if order == 0 { basis } else { &comm_d };
    let right_src: &[ComplexOperator] = if order == 2 { &comm_d } else { basis };
    let right: Vec<ComplexOperator> = right_src.iter().map(|b| &(j * b) * &jinv).collect();
    let threshold = t.tolerance.threshold(1.0);
    let mut out = OrderOutcome { order, max_residual: 0.0, worst_pair: None, failing: Vec::new(), threshold };
    for (ia, a) in left.iter().enumerate() {
        for (ib, b) in right.iter().enumerate() {
            let r = windowed(&commutator(a, b, false)?, window)?;
            if r > out.max_residual || out.worst_pair.is_none() {
                out.max_residual = r;
                out.worst_pair = Some((ia, ib));
            }
            if !(r <= threshold) {
                out.failing.push((ia, ib, r));
            }
        }
    }
    Ok(out)
}

pub fn check_order_condition(t: &SpectralTripleData, order: u8, window: &ComplexOperator) -> Result<Vec<CheckRecord>> {
    let o = order_condition(t, order, window)?;
    let anchor = [ZEROTH_ANCHOR, FIRST_ANCHOR, SECOND_ANCHOR][order as usize];
    let mut rec = CheckRecord::residual(format!("order{order}"), anchor, o.max_residual, o.threshold);
    if let Some(&(a, b, _)) = o.failing.first() {
        rec = rec
            .with_witness(format!("({}, {})", t.basis_labels[a], t.basis_labels[b]))
            .with_detail(format!("{} failing pairs", o.failing.len()));
    }
    Ok(vec![rec])
}

fn vectorize(ops: &[ComplexOperator]) -> DMatrix<C64> {
    let n = ops.first().map_or(0, |o| o.dim());
    let mut m = DMatrix::from_element(n * n, ops.len(), ZERO);
    for (k, op) in ops.iter().enumerate() {
        for (v, (i, j)) in op.matrix().iter() {
            m[(i * n + j, k)] += *v;
        }
    }
    m
}

fn rank(m: &DMatrix<C64>, tol: f64) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    m.clone().singular_values().iter().filter(|&&s| s > tol).count()
}

fn require_finite(t: &SpectralTripleData, what: &str) -> Result<()> {
    if t.is_windowed() {
        return Err(Error::HypothesisNotMet(format!("{what} is only meaningful on finite fixtures")));
    }
    Ok(())
}

pub const NONDEGENERATE_ANCHOR: &str = "non-degenerate: π faithful and [D, π(a)] = 0 only for a ∈ ℂ1";

/// Faithfulness (basis independence) and the commutant condition inside the algebra.
pub fn check_nondegenerate(t: &SpectralTripleData) -> Result<Vec<CheckRecord>> {
    require_finite(t, "non-degeneracy")?;
    let tol = t.tolerance.threshold(1.0);
    let basis = &t.algebra_basis;
    let k = basis.len();
    let r = rank(&vectorize(basis), tol);
    let faithful = CheckRecord::flag("nondegenerate.faithful", NONDEGENERATE_ANCHOR, r == k)
        .with_detail(format!("basis rank {r} of {k}"));
    let comms: Vec<ComplexOperator> =
        basis.iter().map(|a| commutator(&t.dirac, a, false)).collect::<Result<_>>()?;
    let nullity = k - rank(&vectorize(&comms), tol);
    let commutant = CheckRecord::flag("nondegenerate.commutant", NONDEGENERATE_ANCHOR, nullity == 1)
        .with_detail(format!("dim{{a : [D, a] = 0}} = {nullity}"));
    Ok(vec![faithful, commutant])
}

/// Dimension of the joint commutant of the given operators, by the nullity of
/// `Σ_T A_T* A_T` with `A_T X = XT − TX`.
pub fn commutant_dimension(ops: &[&ComplexOperator], tol: f64) -> Result<usize> {
    let n = ops.first().map_or(0, |o| o.dim());
    let nn = n * n;
    let mut gram = DMatrix::from_element(nn, nn, ZERO);
    for op in ops {
        let t = op.to_dense();
        // Row-major vec(X): (XT)_{ij} = Σ_k X_ik T_kj and (TX)_{ij} = Σ_k T_ik X_kj.
        let mut a = DMatrix::from_element(nn, nn, ZERO);
        for i in 0..n {
            for j in 0..n {
                let row = i * n + j;
                for k in 0..n {
                    a[(row, i * n + k)] += t[(k, j)];
                    a[(row, k * n + j)] -= t[(i, k)];
                }
            }
        }
        gram += a.adjoint() * &a;
    }
    let h = ComplexOperator::from_dense(&gram, false)?;
    let values = hermitian_eigenvalues(&h)?;
    Ok(values.iter().filter(|&&v| v.abs() <= tol).count())
}

pub const IRREDUCIBLE_ANCHOR: &str = "irreducible: joint commutant of π(𝒜) and D is ℂ1";

pub fn check_irreducible(t: &SpectralTripleData) -> Result<Vec<CheckRecord>> {
    require_finite(t, "irreducibility")?;
    if t.dim() > 32 {
        return Err(Error::HypothesisNotMet(format!("commutant solve capped at dimension 32, got {}", t.dim())));
    }
    let mut ops: Vec<&ComplexOperator> = t.algebra_basis.iter().collect();
    ops.push(&t.dirac);
    let dim = commutant_dimension(&ops, 1e-8)?;
    Ok(vec![CheckRecord::flag("irreducible", IRREDUCIBLE_ANCHOR, dim == 1).with_detail(format!("commutant dimension {dim}"))])
}

pub const EQUIVARIANCE_ANCHOR: &str = "equivariant triple: (π, u) covariant, u_g unitary, J u_g J⁻¹ per *-structure";

/// Unitarity, representation property, algebra preservation, invariance of
/// `D`, the star-dependent `J` relation and Lip-isometry.
pub fn check_equivariance(t: &SpectralTripleData, star: &GroupHopfData, window: &ComplexOperator) -> Result<Vec<CheckRecord>> {
    let u = t.unitaries.as_ref().ok_or(Error::MissingUnitaries)?;
    let g = u.group();
    if star.group() != g {
        return Err(Error::InvalidTriple("Hopf data and unitaries use different groups".into()));
    }
    let tol = t.tolerance;
    let thr = tol.threshold(1.0);
    let els = g.elements_by_length();
    let mut out = Vec::new();

    let unit = u.ops().iter().map(|x| x.unitarity_residual()).fold(0.0, f64::max);
    out.push(CheckRecord::residual("equivariance.unitary", EQUIVARIANCE_ANCHOR, unit, thr));

    let mut hom = (0.0, None);
    for &a in &els {
        for &b in &els {
            if let Some(ab) = g.mul(a, b) {
                let r = relation_residual(&(u.get(a) * u.get(b)), u.get(ab), None)?;
                if r > hom.0 {
                    hom = (r, Some(format!("({}, {})", g.label(a), g.label(b))));
                }
            }
        }
    }
    out.push(CheckRecord::residual("equivariance.representation", EQUIVARIANCE_ANCHOR, hom.0, thr).with_optional_witness(hom.1));

    let mut smooth = (0.0, None);
    for &h in &els {
        for (i, a) in t.algebra_basis.iter().enumerate() {
            let (_, r) = span_coordinates(&t.algebra_basis, &u.alpha(h, a), Some(window))?;
            if r > smooth.0 {
                smooth = (r, Some(format!("g={}, {}", g.label(h), t.basis_labels[i])));
            }
        }
    }
    out.push(
        CheckRecord::residual("equivariance.action_preserves_algebra", EQUIVARIANCE_ANCHOR, smooth.0, thr)
            .with_optional_witness(smooth.1),
    );

    let (inv_res, inv_witness) = invariance_residual(t, window)?;
    let invariant = inv_res <= tol.threshold(t.dirac.max_abs());
    out.push(
        CheckRecord::residual("equivariance.dirac_invariant", EQUIVARIANCE_ANCHOR, inv_res, tol.threshold(t.dirac.max_abs()))
            .report_only()
            .with_optional_witness(inv_witness)
            .with_detail(if invariant { "[D, u_g] = 0 for all g" } else { "[D, u_g] bounded but nonzero" }),
    );

    if let Some(j) = &t.real {
        let (id, name) = match star.star() {
            StarConvention::InverseStar => ("equivariance.j_unitarily_invariant", "J u_g J⁻¹ = u_g"),
            StarConvention::IdentityStar => ("equivariance.j_twisted_invariant", "J u_g J⁻¹ = u_g*"),
        };
        let mut worst = (0.0, None);
        for &h in &els {
            let lhs = conjugate(j, u.get(h));
            let rhs = match star.star() {
                StarConvention::InverseStar => u.get(h).clone(),
                StarConvention::IdentityStar => u.get(h).adjoint(),
            };
            let r = relation_residual(&lhs, &rhs, Some(window))?;
            if r > thr && worst.1.is_none() {
                worst.1 = Some(format!("g={}", g.label(h)));
            }
            worst.0 = f64::max(worst.0, r);
        }
        out.push(
            CheckRecord::residual(id, EQUIVARIANCE_ANCHOR, worst.0, thr)
                .with_optional_witness(worst.1)
                .with_detail(name),
        );
    }

    if invariant {
        let mut lip = (0.0, None);
        for (i, a) in t.algebra_basis.iter().enumerate() {
            let base = commutator(&t.dirac, a, false)?.compress(window)?.operator_norm();
            for &h in &els {
                let n = commutator(&t.dirac, &u.alpha(h, a), false)?.compress(window)?.operator_norm();
                let r = (n - base).abs();
                if r > lip.0 {
                    lip = (r, Some(format!("g={}, {}", g.label(h), t.basis_labels[i])));
                }
            }
        }
        out.push(
            CheckRecord::residual("equivariance.lip_isometric", "‖[D, π(α_g(a))]‖ = ‖[D, π(a)]‖", lip.0, thr)
                .with_optional_witness(lip.1),
        );
    }
    Ok(out)
}

/// `max_g ‖[D, u_g]‖` (max-entry) on the window, with the first offending element.
pub fn invariance_residual(t: &SpectralTripleData, window: &ComplexOperator) -> Result<(f64, Option<String>)> {
    let u = t.unitaries.as_ref().ok_or(Error::MissingUnitaries)?;
    let g = u.group();
    let thr = t.tolerance.threshold(t.dirac.max_abs());
    let mut worst = (0.0, None);
    for h in g.elements_by_length() {
        let r = windowed(&commutator(&t.dirac, u.get(h), false)?, window)?;
        if r > thr && worst.1.is_none() {
            worst.1 = Some(format!("g={}", g.label(h)));
        }
        worst.0 = f64::max(worst.0, r);
    }
    Ok(worst)
}

/// `D(1 + D²)^{-1}` through the eigendecomposition of `D`.
pub fn bounded_transform(t: &SpectralTripleData) -> Result<ComplexOperator> {
    let (values, vectors) = hermitian_eigen(&t.dirac)?;
    let f = DMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            C64::new(values[i] / (1.0 + values[i] * values[i]), 0.0)
        } else {
            ZERO
        }
    });
    let dense = &vectors * f * vectors.adjoint();
    let cleaned = dense.map(|z| C64::new(clean(z.re), clean(z.im)));
    ComplexOperator::from_dense(&cleaned, false)
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

/// Partial sums of `(1 + λ²)^{-p/2}` over the eigenvalues of `D`, ordered by `|λ|`.
pub fn summability_partial_sums(t: &SpectralTripleData, p: f64, terms: usize) -> Result<Vec<f64>> {
    let mut values = hermitian_eigenvalues(&t.dirac)?;
    values.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut acc = 0.0;
    Ok(values
        .iter()
        .take(terms)
        .map(|l| {
            acc += (1.0 + l * l).powf(-p / 2.0);
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::tensor;

    fn diag2() -> Vec<ComplexOperator> {
        vec![
            ComplexOperator::real_diagonal(&[1.0, 0.0]).unwrap(),
            ComplexOperator::real_diagonal(&[0.0, 1.0]).unwrap(),
        ]
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn two_point_even_triple_axioms_vanish() {
        let t = SpectralTripleData::new(ComplexOperator::sigma1(), diag2(), tol())
            .unwrap()
            .with_grading(ComplexOperator::sigma3())
            .unwrap();
        let recs = verify_axioms(&t, &t.interior(0).unwrap()).unwrap();
        assert!(recs.iter().all(|r| r.pass && r.residual == 0.0), "{recs:?}");
    }

    #[test]
    fn bad_grading_is_rejected() {
        let t = SpectralTripleData::new(ComplexOperator::sigma1(), vec![ComplexOperator::identity(2).unwrap()], tol()).unwrap();
        let err = t.with_grading(ComplexOperator::sigma1()).unwrap_err();
        assert!(matches!(err, Error::InvalidTriple(ref s) if s.contains("χD")));
        // The anticommutator itself is 2σ₁·σ₁ = 2.
        let r = commutator(&ComplexOperator::sigma1(), &ComplexOperator::sigma1(), true).unwrap().max_abs();
        assert_eq!(r, 2.0);
    }

    #[test]
    fn ko_table_rows() {
        use Sign::*;
        assert_eq!(ko_dimensions(Plus, Plus, Some(Plus)), vec![0]);
        assert_eq!(ko_dimensions(Plus, Minus, None), vec![1]);
        assert_eq!(ko_dimensions(Minus, Plus, Some(Minus)), vec![2]);
        assert_eq!(ko_dimensions(Plus, Undetermined, None), vec![1, 7]);
        assert!(ko_dimensions(Plus, Minus, Some(Plus)).is_empty());
    }

    #[test]
    fn zero_dirac_leaves_sign_undetermined() {
        let t = SpectralTripleData::new(ComplexOperator::zero(1).unwrap(), vec![ComplexOperator::identity(1).unwrap()], tol())
            .unwrap()
            .with_real_structure(ComplexOperator::conjugation(1).unwrap())
            .unwrap();
        let s = classify_real_structure(&t, &t.interior(0).unwrap()).unwrap();
        assert_eq!(s.eps, Sign::Plus);
        assert_eq!(s.eps_prime, Sign::Undetermined);
        assert_eq!(s.eps_dprime, None);
        assert_eq!(s.ko_dims, vec![1, 7]);
    }

    #[test]
    fn windowed_group_triple_has_ko_one() {
        let z = GroupModel::windowed_z(8).unwrap();
        let t = group_triple(&z, &Weight::inclusion(&z).unwrap(), Some(1), tol()).unwrap();
        let s = classify_real_structure(&t, &t.interior(2).unwrap()).unwrap();
        assert_eq!((s.eps, s.eps_prime), (Sign::Plus, Sign::Minus));
        assert_eq!(s.ko_dims, vec![1]);
    }

    #[test]
    fn missing_j_and_zeroth_order_violation() {
        let t = SpectralTripleData::new(ComplexOperator::sigma3(), vec![ComplexOperator::identity(2).unwrap()], tol()).unwrap();
        assert_eq!(classify_real_structure(&t, &t.interior(0).unwrap()).unwrap_err(), Error::NoRealStructure);
        // Full matrix algebra on ℂ² with J = cc violates zeroth order.
        let basis = vec![ComplexOperator::identity(2).unwrap(), ComplexOperator::sigma1(), ComplexOperator::sigma3()];
        let t = SpectralTripleData::new(ComplexOperator::sigma3(), basis, tol())
            .unwrap()
            .with_real_structure(ComplexOperator::conjugation(2).unwrap())
            .unwrap();
        assert!(matches!(
            classify_real_structure(&t, &t.interior(0).unwrap()),
            Err(Error::ZerothOrderViolation { a: 1, b: 2, .. })
        ));
    }

    #[test]
    fn alternative_real_structure_signs() {
        // ℂ², χ = σ₃, D = σ₁, J = cc: KO 0, then J′ = Jχ has (εε″, −ε′, ε″) = (+, −, +).
        let t = SpectralTripleData::new(ComplexOperator::sigma1(), diag2(), tol())
            .unwrap()
            .with_grading(ComplexOperator::sigma3())
            .unwrap()
            .with_real_structure(ComplexOperator::conjugation(2).unwrap())
            .unwrap();
        let p = t.interior(0).unwrap();
        let s = classify_real_structure(&t, &p).unwrap();
        let alt = classify_real_structure(&t.alternative_real_structure().unwrap(), &p).unwrap();
        let v = |s: Sign| s.value().unwrap();
        assert_eq!(v(alt.eps), v(s.eps) * v(s.eps_dprime.unwrap()));
        assert_eq!(v(alt.eps_prime), -v(s.eps_prime));
        assert_eq!(alt.eps_dprime, s.eps_dprime);
        assert!(alt.ko_dims.is_empty());
    }

    #[test]
    fn group_triple_order_conditions() {
        let z = GroupModel::windowed_z(8).unwrap();
        let t = group_triple(&z, &Weight::inclusion(&z).unwrap(), Some(1), tol()).unwrap();
        let p = t.interior(2).unwrap();
        for k in 0..3 {
            assert!(order_condition(&t, k, &p).unwrap().passed());
        }
        let t = group_triple(&z, &Weight::absolute(&z).unwrap(), Some(1), tol()).unwrap();
        let o = order_condition(&t, 1, &p).unwrap();
        assert!(!o.passed());
        let recs = check_order_condition(&t, 1, &p).unwrap();
        assert!(recs[0].witness.is_some());
    }

    #[test]
    fn nondegenerate_examples() {
        let z2 = GroupModel::cyclic(2).unwrap();
        let t = group_triple(&z2, &Weight::from_values(&z2, vec![0.0, 1.0]).unwrap(), None, tol()).unwrap();
        assert!(check_nondegenerate(&t).unwrap().iter().all(|r| r.pass));
        let t = group_triple(&z2, &Weight::constant(&z2, 0.0).unwrap(), None, tol()).unwrap();
        let recs = check_nondegenerate(&t).unwrap();
        assert!(recs[0].pass && !recs[1].pass);
        let t = SpectralTripleData::new(ComplexOperator::sigma3(), vec![ComplexOperator::identity(2).unwrap()], tol()).unwrap();
        assert!(check_nondegenerate(&t).unwrap().iter().all(|r| r.pass));
    }

    #[test]
    fn irreducible_examples() {
        let z2 = GroupModel::cyclic(2).unwrap();
        let t = group_triple(&z2, &Weight::from_values(&z2, vec![0.0, 1.0]).unwrap(), None, tol()).unwrap();
        assert!(check_irreducible(&t).unwrap()[0].pass);
        let t = SpectralTripleData::new(
            ComplexOperator::real_diagonal(&[0.0, 1.0]).unwrap(),
            vec![ComplexOperator::identity(2).unwrap()],
            tol(),
        )
        .unwrap();
        let r = &check_irreducible(&t).unwrap()[0];
        assert!(!r.pass);
        assert_eq!(r.detail.as_deref(), Some("commutant dimension 2"));
    }

    #[test]
    fn windowed_rejected_for_commutant_checks() {
        let z = GroupModel::windowed_z(2).unwrap();
        let t = group_triple(&z, &Weight::inclusion(&z).unwrap(), Some(1), tol()).unwrap();
        assert!(matches!(check_irreducible(&t), Err(Error::HypothesisNotMet(_))));
    }

    #[test]
    fn twisted_invariance_for_scalar_phases() {
        let z = GroupModel::windowed_z(3).unwrap();
        let t = SpectralTripleData::new(ComplexOperator::sigma1(), diag2(), tol())
            .unwrap()
            .with_real_structure(ComplexOperator::conjugation(2).unwrap())
            .unwrap()
            .with_unitaries(Unitaries::phase(&z, 2, 0.7).unwrap())
            .unwrap();
        let star = GroupHopfData::new(&z, StarConvention::IdentityStar).unwrap();
        let recs = check_equivariance(&t, &star, &t.interior(0).unwrap()).unwrap();
        let r = recs.iter().find(|r| r.id == "equivariance.j_twisted_invariant").unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn rotation_equivariance_and_identity_star_failure() {
        let z = GroupModel::windowed_z(6).unwrap();
        let theta = 2.0 * std::f64::consts::PI * 0.3;
        let t = group_triple(&z, &Weight::inclusion(&z).unwrap(), Some(1), tol())
            .unwrap()
            .with_unitaries(Unitaries::rotation(&z, &z, theta).unwrap())
            .unwrap();
        let p = t.interior(2).unwrap();
        let inv = check_equivariance(&t, &GroupHopfData::new(&z, StarConvention::InverseStar).unwrap(), &p).unwrap();
        assert!(inv.iter().all(|r| r.pass), "{inv:?}");
        let id = check_equivariance(&t, &GroupHopfData::new(&z, StarConvention::IdentityStar).unwrap(), &p).unwrap();
        let r = id.iter().find(|r| r.id == "equivariance.j_twisted_invariant").unwrap();
        assert!(!r.pass);
        assert_eq!(r.witness.as_deref(), Some("g=1"));
    }

    #[test]
    fn bounded_transform_examples() {
        let mk = |d: ComplexOperator| SpectralTripleData::new(d.clone(), vec![ComplexOperator::identity(d.dim()).unwrap()], tol()).unwrap();
        let b = bounded_transform(&mk(ComplexOperator::zero(2).unwrap())).unwrap();
        assert_eq!(b.max_abs(), 0.0);
        let b = bounded_transform(&mk(ComplexOperator::sigma3())).unwrap();
        let want = ComplexOperator::real_diagonal(&[0.5, -0.5]).unwrap();
        assert!(relation_residual(&b, &want, None).unwrap() < 1e-15);
        let b = bounded_transform(&mk(ComplexOperator::real_diagonal(&[2.0]).unwrap())).unwrap();
        assert!((b.get(0, 0) - C64::new(0.4, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn summability_examples() {
        let t = SpectralTripleData::new(ComplexOperator::zero(2).unwrap(), vec![ComplexOperator::identity(2).unwrap()], tol()).unwrap();
        assert_eq!(summability_partial_sums(&t, 1.0, 10).unwrap(), vec![1.0, 2.0]);
        let z = GroupModel::windowed_z(2).unwrap();
        let t = group_triple(&z, &Weight::inclusion(&z).unwrap(), Some(1), tol()).unwrap();
        let s = summability_partial_sums(&t, 2.0, 5).unwrap();
        for (x, y) in s.iter().zip([1.0, 1.5, 2.0, 2.2, 2.4]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn bounded_transform_commutes_with_invariant_unitaries() {
        let z2 = GroupModel::cyclic(2).unwrap();
        let d = tensor(&ComplexOperator::sigma3(), &ComplexOperator::identity(2).unwrap()).unwrap();
        let u = tensor(&ComplexOperator::identity(2).unwrap(), &ComplexOperator::sigma1()).unwrap();
        let t = SpectralTripleData::new(d, vec![ComplexOperator::identity(4).unwrap()], tol())
            .unwrap()
            .with_unitaries(Unitaries::new(&z2, vec![ComplexOperator::identity(4).unwrap(), u.clone()]).unwrap())
            .unwrap();
        let b = bounded_transform(&t).unwrap();
        assert!(commutator(&b, &u, false).unwrap().max_abs() < 1e-14);
    }
}
