//! The spectral triple on the crossed product `A ⋊ G`.
//!
//! Index order on `Ĥ` is `(ξ, g, s)`: base space first, then `ℓ²(G)`, then the
//! `ℂ²` doubling when the base is odd. Both representations are provided:
//!
//! * `Pi1Lambda`: `π̂₁(a)λ̂_h` sends `ξ⊗δ_g` to `u_{hg}* a u_{hg} ξ ⊗ δ_{hg}`.
//! * `Pi2Gamma`: `π̂₂(a)Γ̂_h` sends `ξ⊗δ_g` to `a u_h ξ ⊗ δ_{hg}`.
//!
//! The Dirac operator is `D⊗1⊗σ₁ + 1⊗M_l⊗σ₂` over an odd base and
//! `D⊗1 + χ⊗M_l` over an even one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::groups::{self, Character, GroupModel, Weight};
use crate::opalg::{
    assemble_blocks, commutator, relation_residual, span_coordinates, tensor, tensor_all, ComplexOperator,
    HilbertSpace, C64, ONE, ZERO,
};
use crate::report::CheckRecord;
use crate::triples::{invariance_residual, SpectralTripleData};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Pi1Lambda,
    Pi2Gamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Odd base, even crossed triple on `H⊗ℓ²(G)⊗ℂ²`.
    EvenFromOdd,
    /// Even base, odd crossed triple on `H⊗ℓ²(G)`.
    OddFromEven,
}

/// Generator range and interior margin for checks on the crossed triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossedConfig {
    /// Generators are `a_i δ_g` with word length `|g| <= g_max`.
    pub g_max: usize,
    /// Interior margin applied to every windowed factor.
    pub margin: usize,
}

impl Default for CrossedConfig {
    fn default() -> Self {
        Self::for_g_max(2)
    }
}

impl CrossedConfig {
    pub fn for_g_max(g_max: usize) -> Self {
        Self { g_max, margin: 2 * g_max + 2 }
    }
}

/// `Σ a_g δ_g` with coefficient vectors over the base algebra basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CrossedElement {
    pub terms: BTreeMap<usize, Vec<C64>>,
}

impl CrossedElement {
    /// The single term `e_i δ_g`.
    pub fn basis(basis_len: usize, i: usize, g: usize) -> Self {
        let mut v = vec![ZERO; basis_len];
        v[i] = ONE;
        Self { terms: BTreeMap::from([(g, v)]) }
    }

    pub fn add_term(&mut self, g: usize, coeffs: Vec<C64>) {
        let entry = self.terms.entry(g).or_insert_with(|| vec![ZERO; coeffs.len()]);
        for (e, c) in entry.iter_mut().zip(coeffs) {
            *e += c;
        }
    }
}

#[derive(Clone, Debug)]
pub struct CrossedTriple {
    base: SpectralTripleData,
    group: GroupModel,
    weight: Weight,
    representation: Representation,
    parity: Parity,
    action: Vec<ComplexOperator>,
    has_unitaries: bool,
    space: HilbertSpace,
    dirac: ComplexOperator,
    grading: Option<ComplexOperator>,
    m_l: ComplexOperator,
}

pub fn build_crossed(base: &SpectralTripleData, group: &GroupModel, weight: &Weight, rep: Representation) -> Result<CrossedTriple> {
    if weight.group() != group {
        return Err(Error::InvalidWeight("weight belongs to a different group".into()));
    }
    let (action, has_unitaries) = match base.unitaries() {
        Some(u) => {
            if u.group() != group {
                return Err(Error::InvalidTriple("base unitaries use a different group".into()));
            }
            (u.ops().to_vec(), true)
        }
        None => {
            if rep == Representation::Pi2Gamma {
                return Err(Error::MissingUnitaries);
            }
            (vec![ComplexOperator::identity(base.dim())?; group.order()], false)
        }
    };
    if rep == Representation::Pi1Lambda && has_unitaries {
        check_action_preserves_span(base, group, &action)?;
    }
    let m_l = groups::multiplication(weight)?;
    let id_h = ComplexOperator::identity(base.dim())?;
    let id_g = ComplexOperator::identity(group.order())?;
    let (parity, dirac, grading) = match base.grading() {
        None => {
            let d = tensor_all(&[base.dirac(), &id_g, &ComplexOperator::sigma1()])?;
            let m = tensor_all(&[&id_h, &m_l, &ComplexOperator::sigma2()])?;
            let chi = tensor_all(&[&id_h, &id_g, &ComplexOperator::sigma3()])?;
            (Parity::EvenFromOdd, &d + &m, Some(chi))
        }
        Some(chi) => {
            let d = tensor(base.dirac(), &id_g)?;
            let m = tensor(chi, &m_l)?;
            (Parity::OddFromEven, &d + &m, None)
        }
    };
    let mut labels = Vec::new();
    for i in 0..base.dim() {
        for g in 0..group.order() {
            match parity {
                Parity::EvenFromOdd => {
                    labels.push(format!("{i}|{}|+", group.label(g)));
                    labels.push(format!("{i}|{}|-", group.label(g)));
                }
                Parity::OddFromEven => labels.push(format!("{i}|{}", group.label(g))),
            }
        }
    }
    let space = HilbertSpace::with_labels(labels)?;
    Ok(CrossedTriple {
        base: base.clone(),
        group: group.clone(),
        weight: weight.clone(),
        representation: rep,
        parity,
        action,
        has_unitaries,
        dirac: dirac.with_space(space.clone())?,
        grading: grading.map(|g| g.with_space(space.clone())).transpose()?,
        space,
        m_l,
    })
}

fn check_action_preserves_span(base: &SpectralTripleData, group: &GroupModel, action: &[ComplexOperator]) -> Result<()> {
    let thr = base.tolerance().threshold(1.0);
    for g in group.elements_by_length() {
        for (i, a) in base.algebra_basis().iter().enumerate() {
            let moved = crate::triples::conjugate(&action[g], a);
            let (_, r) = span_coordinates(base.algebra_basis(), &moved, None)?;
            if r > thr {
                return Err(Error::ActionDoesNotPreserveAlgebra { g: group.label(g), basis: i, residual: r });
            }
        }
    }
    Ok(())
}

impl CrossedTriple {
    pub fn base(&self) -> &SpectralTripleData {
        &self.base
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn dirac(&self) -> &ComplexOperator {
        &self.dirac
    }

    pub fn grading(&self) -> Option<&ComplexOperator> {
        self.grading.as_ref()
    }

    pub fn has_unitaries(&self) -> bool {
        self.has_unitaries
    }

    /// `u_g`, the identity when the base carries no unitaries.
    pub fn unitary(&self, g: usize) -> &ComplexOperator {
        &self.action[g]
    }

    /// `M_l` on `ℓ²(G)`.
    pub fn multiplication(&self) -> &ComplexOperator {
        &self.m_l
    }

    /// Same construction in the other representation.
    pub fn with_representation(&self, rep: Representation) -> Result<Self> {
        build_crossed(&self.base, &self.group, &self.weight, rep)
    }

    /// Dimension of `H⊗ℓ²(G)` before doubling.
    pub fn half_dim(&self) -> usize {
        self.base.dim() * self.group.order()
    }

    /// Extends an operator on `H⊗ℓ²(G)` to `Ĥ` (diagonally in `ℂ²` when doubled).
    pub fn lift(&self, op: &ComplexOperator) -> Result<ComplexOperator> {
        let lifted = match self.parity {
            Parity::OddFromEven => op.clone(),
            Parity::EvenFromOdd => {
                let id2 = if op.is_antilinear() { ComplexOperator::conjugation(2)? } else { ComplexOperator::identity(2)? };
                tensor(op, &id2)?
            }
        };
        lifted.with_space(self.space.clone())
    }

    fn blocks<F>(&self, antilinear: bool, f: F) -> Result<ComplexOperator>
    where
        F: Fn(usize) -> Option<(usize, ComplexOperator)>,
    {
        let blocks: Vec<(usize, usize, ComplexOperator)> =
            (0..self.group.order()).filter_map(|g| f(g).map(|(row, b)| (row, g, b))).collect();
        assemble_blocks(
            self.base.dim(),
            self.group.order(),
            blocks.iter().map(|(r, c, b)| (*r, *c, b)),
            antilinear,
        )
    }

    /// `π̂₁(a)`: `ξ⊗δ_g -> u_g* a u_g ξ ⊗ δ_g`, on `H⊗ℓ²(G)`.
    pub fn pi1_half(&self, a: &ComplexOperator) -> Result<ComplexOperator> {
        self.blocks(false, |g| Some((g, &(&self.action[g].adjoint() * a) * &self.action[g])))
    }

    /// `λ̂_h = 1⊗λ_h` on `H⊗ℓ²(G)`.
    pub fn lambda_half(&self, h: usize) -> Result<ComplexOperator> {
        let id = ComplexOperator::identity(self.base.dim())?;
        self.blocks(false, |g| self.group.mul(h, g).map(|hg| (hg, id.clone())))
    }

    /// `π̂₂(a) = a⊗1` on `H⊗ℓ²(G)`.
    pub fn pi2_half(&self, a: &ComplexOperator) -> Result<ComplexOperator> {
        tensor(a, &ComplexOperator::identity(self.group.order())?)
    }

    /// `Γ̂_h = u_h⊗λ_h` on `H⊗ℓ²(G)`.
    pub fn gamma_half(&self, h: usize) -> Result<ComplexOperator> {
        let u = &self.action[h];
        self.blocks(false, |g| self.group.mul(h, g).map(|hg| (hg, u.clone())))
    }

    /// Image of `a δ_h` on `H⊗ℓ²(G)` in the chosen representation.
    pub fn rep_term_half(&self, a: &ComplexOperator, h: usize) -> Result<ComplexOperator> {
        match self.representation {
            Representation::Pi1Lambda => self.blocks(false, |g| {
                self.group.mul(h, g).map(|hg| {
                    let u = &self.action[hg];
                    (hg, &(&u.adjoint() * a) * u)
                })
            }),
            Representation::Pi2Gamma => {
                let au = a * &self.action[h];
                self.blocks(false, |g| self.group.mul(h, g).map(|hg| (hg, au.clone())))
            }
        }
    }

    /// Image of `a δ_h` on `Ĥ`.
    pub fn rep_term(&self, a: &ComplexOperator, h: usize) -> Result<ComplexOperator> {
        self.lift(&self.rep_term_half(a, h)?)
    }

    /// Image of a finitely supported element.
    pub fn rep(&self, f: &CrossedElement) -> Result<ComplexOperator> {
        let basis = self.base.algebra_basis();
        let mut out = ComplexOperator::zero(self.dim())?.with_space(self.space.clone())?;
        for (&g, coeffs) in &f.terms {
            if g >= self.group.order() {
                return Err(Error::UnknownElement(g.to_string()));
            }
            if coeffs.len() != basis.len() {
                return Err(Error::AlgebraMismatch(format!("{} coefficients for {} basis elements", coeffs.len(), basis.len())));
            }
            let mut a = ComplexOperator::zero(self.base.dim())?;
            for (c, b) in coeffs.iter().zip(basis) {
                if *c != ZERO {
                    a = &a + &b.scale(*c);
                }
            }
            out = &out + &self.rep_term(&a, g)?;
        }
        Ok(out)
    }

    /// Projection onto the interior of every windowed factor.
    pub fn interior(&self, margin: usize) -> Result<ComplexOperator> {
        self.lift(&self.interior_half(margin)?)
    }

    pub fn interior_half(&self, margin: usize) -> Result<ComplexOperator> {
        let p_base = self.base.interior(margin)?;
        let p_group = groups::interior_projection(&self.group, margin)?;
        tensor(&p_base, &p_group)
    }

    pub fn is_windowed(&self) -> bool {
        self.base.is_windowed() || self.group.window().is_some()
    }

    /// Generators `(i, g)` with `|g| <= g_max`, in word-length order.
    pub fn generators(&self, g_max: usize) -> Vec<(usize, usize)> {
        let els = self.group.ball(g_max);
        let mut out = Vec::new();
        for &g in &els {
            for i in 0..self.base.algebra_basis().len() {
                out.push((i, g));
            }
        }
        out
    }

    pub fn generator_label(&self, (i, g): (usize, usize)) -> String {
        format!("{}δ_{}", self.base.basis_labels()[i], self.group.label(g))
    }

    /// The crossed triple as a plain triple whose algebra basis is the generator set.
    pub fn as_triple(&self, g_max: usize, real: Option<&ComplexOperator>) -> Result<SpectralTripleData> {
        let gens = self.generators(g_max);
        let basis = gens
            .iter()
            .map(|&(i, g)| self.rep_term(&self.base.algebra_basis()[i], g))
            .collect::<Result<Vec<_>>>()?;
        let labels = gens.iter().map(|&x| self.generator_label(x)).collect();
        let mut t = SpectralTripleData::new(self.dirac.clone(), basis, self.base.tolerance())?
            .with_basis_labels(labels)?
            .mark_windowed(self.is_windowed());
        if let Some(chi) = &self.grading {
            t = t.with_grading(chi.clone())?;
        }
        if let Some(j) = real {
            t = t.with_real_structure(j.clone())?;
        }
        Ok(t)
    }

    /// `U(ξ⊗δ_g) = u_g ξ ⊗ δ_g`, lifted to `Ĥ`.
    pub fn intertwiner_u(&self) -> Result<ComplexOperator> {
        if !self.has_unitaries {
            return Err(Error::MissingUnitaries);
        }
        self.lift(&self.blocks(false, |g| Some((g, self.action[g].clone())))?)
    }

    /// `v_χ(ξ⊗δ_g) = conj(χ(g)) ξ⊗δ_g`, lifted to `Ĥ`.
    pub fn dual_action(&self, chi: &Character) -> Result<ComplexOperator> {
        if !self.group.is_abelian() {
            return Err(Error::GroupNotAbelian);
        }
        let id = ComplexOperator::identity(self.base.dim())?;
        self.lift(&self.blocks(false, |g| Some((g, id.scale(chi.value(g).conj()))))?)
    }
}

pub const CONSTRUCTION_ANCHOR: &str = "crossed triple: D̂ = D⊗1⊗σ₁ + 1⊗M_l⊗σ₂, grading 1⊗1⊗σ₃";
pub const EQ40_ANCHOR: &str = "[D⊗1, π̂₁(a)λ̂_h](ξ⊗δ_g) = [D, π(α_{g⁻¹h⁻¹}(a))]ξ⊗δ_{hg}";
pub const EQ41_ANCHOR: &str = "[1⊗M_l, π̂₁(a)λ̂_h] = (1⊗M_{l_h})π̂₁(a)λ̂_h";
pub const COVARIANCE_ANCHOR: &str = "covariance: λ̂_h π̂₁(a) λ̂_h* = π̂₁(α_h(a))";
pub const HOMOMORPHISM_ANCHOR: &str = "integrated form is a *-representation of C_c(G, 𝒜)";
pub const INTERTWINER_ANCHOR: &str = "U(ξ⊗δ_g) = u_gξ⊗δ_g intertwines π̂₁⋊λ̂ and π̂₂⋊Γ̂";

fn max_entry(op: &ComplexOperator, window: &ComplexOperator) -> Result<f64> {
    Ok(op.compress(window)?.max_abs())
}

/// `D̂ = D̂*`, `D̂² = (D²⊗1 + 1⊗M_l²)[⊗1]`, and the grading relations.
pub fn check_construction(c: &CrossedTriple, cfg: CrossedConfig) -> Result<Vec<CheckRecord>> {
    let tol = c.base.tolerance();
    let d = &c.dirac;
    let mut out = vec![CheckRecord::residual(
        "crossed.dirac_selfadjoint",
        CONSTRUCTION_ANCHOR,
        relation_residual(d, &d.adjoint(), None)?,
        tol.threshold(d.max_abs()),
    )];
    let id_h = ComplexOperator::identity(c.base.dim())?;
    let id_g = ComplexOperator::identity(c.group.order())?;
    let bd = c.base.dirac();
    let sum = &tensor(&(bd * bd), &id_g)? + &tensor(&id_h, &(&c.m_l * &c.m_l))?;
    let expected = c.lift(&sum)?;
    let sq = d * d;
    out.push(CheckRecord::residual(
        "crossed.dirac_square",
        "D̂² = D²⊗1 + 1⊗M_l²",
        relation_residual(&sq, &expected, None)?,
        tol.threshold(sq.max_abs()),
    ));
    if let Some(chi) = &c.grading {
        out.push(CheckRecord::residual(
            "crossed.grading_anticommutes",
            CONSTRUCTION_ANCHOR,
            commutator(chi, d, true)?.max_abs(),
            tol.threshold(d.max_abs()),
        ));
        let mut worst: (f64, Option<String>) = (0.0, None);
        for gen in c.generators(cfg.g_max) {
            let r = commutator(chi, &c.rep_term(&c.base.algebra_basis()[gen.0], gen.1)?, false)?.max_abs();
            if r > worst.0 {
                worst = (r, Some(c.generator_label(gen)));
            }
        }
        out.push(
            CheckRecord::residual("crossed.grading_commutes_with_rep", CONSTRUCTION_ANCHOR, worst.0, tol.threshold(1.0))
                .with_optional_witness(worst.1),
        );
    }
    Ok(out)
}

/// The two commutator identities for `π̂₁⋊λ̂`, on `H⊗ℓ²(G)`.
pub fn check_commutator_identities(c: &CrossedTriple, cfg: CrossedConfig) -> Result<Vec<CheckRecord>> {
    let tol = c.base.tolerance();
    let window = c.interior_half(cfg.margin)?;
    let g = &c.group;
    let id_h = ComplexOperator::identity(c.base.dim())?;
    let d1 = tensor(c.base.dirac(), &ComplexOperator::identity(g.order())?)?;
    let m1 = tensor(&id_h, &c.m_l)?;
    let mut eq40: (f64, Option<String>) = (0.0, None);
    let mut eq41: (f64, Option<String>) = (0.0, None);
    for (i, h) in c.generators(cfg.g_max) {
        let a = &c.base.algebra_basis()[i];
        let x = &c.pi1_half(a)? * &c.lambda_half(h)?;
        let lhs40 = commutator(&d1, &x, false)?;
        // Σ_g [D, α_{(hg)⁻¹}(a)] ⊗ |hg⟩⟨g| with α_k = Ad u_k.
        let rhs40 = c.blocks(false, |gg| {
            g.mul(h, gg).map(|hg| {
                let u = &c.action[g.inverse(hg)];
                let moved = &(u * a) * &u.adjoint();
                (hg, commutator(c.base.dirac(), &moved, false).expect("same space"))
            })
        })?;
        let r = max_entry(&(&lhs40 - &rhs40), &window)?;
        if r > eq40.0 {
            eq40 = (r, Some(c.generator_label((i, h))));
        }
        let lhs41 = commutator(&m1, &x, false)?;
        let rhs41 = &tensor(&id_h, &groups::translation_multiplication(&c.weight, h)?)? * &x;
        let r = max_entry(&(&lhs41 - &rhs41), &window)?;
        if r > eq41.0 {
            eq41 = (r, Some(c.generator_label((i, h))));
        }
    }
    let thr = tol.threshold(1.0);
    Ok(vec![
        CheckRecord::residual("crossed.commutator_dirac", EQ40_ANCHOR, eq40.0, thr).with_optional_witness(eq40.1),
        CheckRecord::residual("crossed.commutator_weight", EQ41_ANCHOR, eq41.0, thr).with_optional_witness(eq41.1),
    ])
}

/// Covariance of both covariant pairs and the *-homomorphism property of the
/// chosen integrated form on generator pairs.
pub fn check_representation(c: &CrossedTriple, cfg: CrossedConfig) -> Result<Vec<CheckRecord>> {
    let tol = c.base.tolerance();
    let thr = tol.threshold(1.0);
    let window = c.interior_half(cfg.margin)?;
    let g = &c.group;
    let basis = c.base.algebra_basis();
    let alpha = |h: usize, a: &ComplexOperator| crate::triples::conjugate(&c.action[h], a);
    let mut cov1: (f64, Option<String>) = (0.0, None);
    let mut cov2: (f64, Option<String>) = (0.0, None);
    for (i, h) in c.generators(cfg.g_max) {
        let a = &basis[i];
        let lam = c.lambda_half(h)?;
        let r = max_entry(&(&crate::triples::conjugate(&lam, &c.pi1_half(a)?) - &c.pi1_half(&alpha(h, a))?), &window)?;
        if r > cov1.0 {
            cov1 = (r, Some(c.generator_label((i, h))));
        }
        if c.has_unitaries {
            let gam = c.gamma_half(h)?;
            let r = max_entry(&(&crate::triples::conjugate(&gam, &c.pi2_half(a)?) - &c.pi2_half(&alpha(h, a))?), &window)?;
            if r > cov2.0 {
                cov2 = (r, Some(c.generator_label((i, h))));
            }
        }
    }
    let mut mult: (f64, Option<String>) = (0.0, None);
    let mut star: (f64, Option<String>) = (0.0, None);
    let gens = c.generators(cfg.g_max);
    let images: Vec<ComplexOperator> =
        gens.iter().map(|&(i, h)| c.rep_term_half(&basis[i], h)).collect::<Result<_>>()?;
    for (x, &(i, gx)) in gens.iter().enumerate() {
        let a = &basis[i];
        // (aδ_g)* = α_{g⁻¹}(a*)δ_{g⁻¹}
        let gi = g.inverse(gx);
        let adj = c.rep_term_half(&alpha(gi, &a.adjoint()), gi)?;
        let r = max_entry(&(&images[x].adjoint() - &adj), &window)?;
        if r > star.0 {
            star = (r, Some(c.generator_label((i, gx))));
        }
        for (y, &(j, gy)) in gens.iter().enumerate() {
            let Some(prod_g) = g.mul(gx, gy) else { continue };
            // (aδ_g)(bδ_h) = a α_g(b) δ_{gh}
            let prod = c.rep_term_half(&(a * &alpha(gx, &basis[j])), prod_g)?;
            let r = max_entry(&(&(&images[x] * &images[y]) - &prod), &window)?;
            if r > mult.0 {
                mult = (r, Some(format!("({}, {})", c.generator_label((i, gx)), c.generator_label((j, gy)))));
            }
        }
    }
    let mut out = vec![CheckRecord::residual("crossed.covariance_pi1", COVARIANCE_ANCHOR, cov1.0, thr).with_optional_witness(cov1.1)];
    if c.has_unitaries {
        out.push(
            CheckRecord::residual("crossed.covariance_pi2", "covariance: Γ̂_h π̂₂(a) Γ̂_h* = π̂₂(α_h(a))", cov2.0, thr)
                .with_optional_witness(cov2.1),
        );
    }
    let which = match c.representation {
        Representation::Pi1Lambda => "pi1",
        Representation::Pi2Gamma => "pi2",
    };
    out.push(CheckRecord::residual(format!("crossed.multiplicative_{which}"), HOMOMORPHISM_ANCHOR, mult.0, thr).with_optional_witness(mult.1));
    out.push(CheckRecord::residual(format!("crossed.star_{which}"), HOMOMORPHISM_ANCHOR, star.0, thr).with_optional_witness(star.1));
    Ok(out)
}

/// Per basis element, `sup_g ‖[D, π(α_g(a))]‖`; the Lemma's bound; and Lip-isometry when invariant.
pub fn check_equicontinuity(base: &SpectralTripleData, group: &GroupModel, margin: usize) -> Result<Vec<CheckRecord>> {
    let u = base.unitaries().ok_or(Error::MissingUnitaries)?;
    if u.group() != group {
        return Err(Error::InvalidTriple("base unitaries use a different group".into()));
    }
    let window = base.interior(margin)?;
    let tol = base.tolerance();
    let d = base.dirac();
    let anchor = "equicontinuity: sup_g ‖[D, π(α_g(a))]‖ < ∞";
    let mut out = Vec::new();
    let (inv, _) = invariance_residual(base, &window)?;
    let invariant = inv <= tol.threshold(d.max_abs());
    let du: Vec<f64> = (0..group.order())
        .map(|g| commutator(d, u.get(g), false).and_then(|x| x.compress(&window)).map(|x| x.operator_norm()))
        .collect::<Result<_>>()?;
    let mut bound_excess: (f64, Option<String>) = (f64::NEG_INFINITY, None);
    let mut lip = 0.0f64;
    let mut smooth = 0.0f64;
    for (i, a) in base.algebra_basis().iter().enumerate() {
        let own = commutator(d, a, false)?.compress(&window)?.operator_norm();
        let a_norm = a.compress(&window)?.operator_norm();
        let mut sup = 0.0f64;
        for g in group.elements_by_length() {
            let moved = u.alpha(g, a);
            smooth = smooth.max(span_coordinates(base.algebra_basis(), &moved, Some(&window))?.1);
            let n = commutator(d, &moved, false)?.compress(&window)?.operator_norm();
            sup = sup.max(n);
            lip = lip.max((n - own).abs());
            let excess = n - (2.0 * du[g] * a_norm + own);
            if excess > bound_excess.0 {
                bound_excess = (excess, Some(format!("g={}, {}", group.label(g), base.basis_labels()[i])));
            }
        }
        out.push(
            CheckRecord::residual(format!("equicontinuity.sup[{}]", base.basis_labels()[i]), anchor, sup, f64::INFINITY)
                .report_only()
                .with_detail(format!("‖[D, π(a)]‖ = {own:.6}")),
        );
    }
    let thr = tol.threshold(1.0);
    out.push(CheckRecord::residual("equicontinuity.smooth", anchor, smooth, thr));
    out.push(
        CheckRecord::residual(
            "equicontinuity.bound",
            "‖[D, π(α_g(a))]‖ ≤ 2‖[D, u_g]‖‖π(a)‖ + ‖[D, π(a)]‖",
            bound_excess.0.max(0.0),
            thr,
        )
        .with_optional_witness(bound_excess.1.filter(|_| bound_excess.0 > thr)),
    );
    if invariant {
        out.push(CheckRecord::residual("equicontinuity.lip_isometric", "‖[D, π(α_g(a))]‖ = ‖[D, π(a)]‖", lip, thr));
    }
    Ok(out)
}

/// Residuals of `Uπ̂₁(a)U* = π̂₂(a)`, `Uλ̂_hU* = Γ̂_h` and `UD̂U* = D̂` on the interior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntertwinerResiduals {
    pub pi: f64,
    pub lambda: f64,
    pub dirac: f64,
    /// Whether `[D, u_g] = 0` for all g, the hypothesis for the Dirac identity.
    pub invariant: bool,
}

pub fn intertwiner_residuals(c: &CrossedTriple, cfg: CrossedConfig) -> Result<IntertwinerResiduals> {
    let u_half = c.blocks(false, |g| Some((g, c.action[g].clone())))?;
    if !c.has_unitaries {
        return Err(Error::MissingUnitaries);
    }
    let window = c.interior(cfg.margin)?;
    let half_window = c.interior_half(cfg.margin)?;
    let mut pi = 0.0f64;
    for a in c.base.algebra_basis() {
        let lhs = crate::triples::conjugate(&u_half, &c.pi1_half(a)?);
        pi = pi.max(max_entry(&(&lhs - &c.pi2_half(a)?), &half_window)?);
    }
    let mut lambda = 0.0f64;
    for h in c.group.ball(cfg.g_max) {
        let lhs = crate::triples::conjugate(&u_half, &c.lambda_half(h)?);
        lambda = lambda.max(max_entry(&(&lhs - &c.gamma_half(h)?), &half_window)?);
    }
    let u = c.intertwiner_u()?;
    let dirac = max_entry(&(&crate::triples::conjugate(&u, &c.dirac) - &c.dirac), &window)?;
    let (inv, _) = invariance_residual(&c.base, &c.base.interior(cfg.margin)?)?;
    let invariant = inv <= c.base.tolerance().threshold(c.base.dirac().max_abs());
    Ok(IntertwinerResiduals { pi, lambda, dirac, invariant })
}

pub fn check_intertwiner(c: &CrossedTriple, cfg: CrossedConfig) -> Result<Vec<CheckRecord>> {
    let r = intertwiner_residuals(c, cfg)?;
    let thr = c.base.tolerance().threshold(1.0);
    let mut dirac = CheckRecord::residual("intertwiner.dirac", INTERTWINER_ANCHOR, r.dirac, thr);
    if !r.invariant {
        dirac = dirac.report_only().with_detail("[D, u_g] ≠ 0: bounded-perturbation equivalent only");
    }
    Ok(vec![
        CheckRecord::residual("intertwiner.pi", INTERTWINER_ANCHOR, r.pi, thr),
        CheckRecord::residual("intertwiner.lambda", INTERTWINER_ANCHOR, r.lambda, thr),
        dirac,
    ])
}

/// The corepresentation unitary on `Ĥ⊗ℂG`: `…δ_x…⊗δ_g -> …δ_x…⊗δ_{xg}`.
pub fn corepresentation(c: &CrossedTriple) -> Result<ComplexOperator> {
    if !c.group.is_finite() {
        return Err(Error::GroupNotFinite);
    }
    let m = c.group.order();
    let s = c.dim() / c.half_dim();
    let n = c.dim() * m;
    ComplexOperator::partial_permutation(
        n,
        |idx| {
            let gslot = idx % m;
            let rest = idx / m;
            let x = (rest / s) % m;
            Some(rest * m + c.group.mul(x, gslot).expect("finite"))
        },
        false,
    )
}

/// `1⊗P_e` on `Ĥ⊗ℂG`.
pub fn unit_slot_projection(c: &CrossedTriple) -> Result<ComplexOperator> {
    let m = c.group.order();
    let e = c.group.identity();
    let diag: Vec<f64> = (0..c.dim() * m).map(|i| if i % m == e { 1.0 } else { 0.0 }).collect();
    ComplexOperator::real_diagonal(&diag)
}

pub const COACTION_ANCHOR: &str = "equivariance for the dual coaction aδ_g -> aδ_g⊗δ_g";
pub const DUAL_ACTION_ANCHOR: &str = "invariance under v_χ(ξ⊗δ_g) = conj(χ(g))ξ⊗δ_g";

/// Coaction form on finite groups; dual-action form on abelian groups with the
/// given characters. Both run when the group is finite abelian and characters are given.
pub fn check_dual_symmetry(c: &CrossedTriple, characters: &[Character], cfg: CrossedConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    if c.group.is_finite() {
        out.extend(check_coaction(c, cfg)?);
    } else if !c.group.is_abelian() {
        return Err(Error::GroupNotAbelian);
    }
    if !characters.is_empty() || !c.group.is_finite() {
        if !c.group.is_abelian() {
            return Err(Error::GroupNotAbelian);
        }
        out.extend(check_dual_action(c, characters, cfg)?);
    }
    Ok(out)
}

fn check_coaction(c: &CrossedTriple, _cfg: CrossedConfig) -> Result<Vec<CheckRecord>> {
    let thr = c.base.tolerance().threshold(1.0);
    let m = c.group.order();
    let w = corepresentation(c)?;
    let id_m = ComplexOperator::identity(m)?;
    let pe = unit_slot_projection(c)?;
    let d1 = tensor(&c.dirac, &id_m)?;
    let comm = commutator(&d1, &w, false)?.max_abs();
    let mut chi_comm = 0.0;
    if let Some(chi) = &c.grading {
        chi_comm = commutator(&tensor(chi, &id_m)?, &w, false)?.max_abs();
    }
    let basis = c.base.algebra_basis();
    let all_rep: Vec<ComplexOperator> = (0..basis.len())
        .flat_map(|i| (0..m).map(move |g| (i, g)))
        .map(|(i, g)| c.rep_term(&basis[i], g))
        .collect::<Result<_>>()?;
    let mut comodule: f64 = 0.0;
    let mut slice: (f64, Option<String>) = (0.0, None);
    let states = coaction_states(m);
    for i in 0..basis.len() {
        for h in 0..m {
            let b = c.rep_term(&basis[i], h)?;
            let lam = groups::left_translation(&c.group, h)?;
            let lhs = &(&w * &tensor(&b, &id_m)?) * &pe;
            let rhs = &(&tensor(&b, &lam)? * &w) * &pe;
            comodule = comodule.max((&lhs - &rhs).max_abs());
            let ad = crate::triples::conjugate(&w, &tensor(&b, &id_m)?);
            for (k, v) in states.iter().enumerate() {
                let s = slice_state(&ad, v, c.dim(), m)?;
                let (_, r) = span_coordinates(&all_rep, &s, None)?;
                if r > slice.0 {
                    slice = (r, Some(format!("b={}, state {k}", c.generator_label((i, h)))));
                }
            }
        }
    }
    Ok(vec![
        CheckRecord::residual("coaction.comodule", COACTION_ANCHOR, comodule, thr),
        CheckRecord::residual("coaction.dirac_commutes", COACTION_ANCHOR, comm.max(chi_comm), thr),
        CheckRecord::residual("coaction.slices_in_algebra", COACTION_ANCHOR, slice.0, thr)
            .with_optional_witness(slice.1)
            .with_detail("states: basis vectors and pairwise superpositions of ℂG; span replaces the double commutant"),
    ])
}

/// Unit vectors `δ_k`, `(δ_k + δ_l)/√2` and `(δ_k + iδ_l)/√2`.
fn coaction_states(m: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::new();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..m {
        let mut v = vec![ZERO; m];
        v[k] = ONE;
        out.push(v);
    }
    for k in 0..m {
        for l in (k + 1)..m {
            for phase in [ONE, C64::new(0.0, 1.0)] {
                let mut v = vec![ZERO; m];
                v[k] = C64::new(r, 0.0);
                v[l] = phase * r;
                out.push(v);
            }
        }
    }
    out
}

/// `(id⊗ω_v)(T)` for `T` on `K⊗ℂ^m`: `Σ conj(v_a) v_b T_{(·,a),(·,b)}`.
fn slice_state(t: &ComplexOperator, v: &[C64], dim: usize, m: usize) -> Result<ComplexOperator> {
    let mut entries = Vec::new();
    for (val, (row, col)) in t.matrix().iter() {
        let (i, a) = (row / m, row % m);
        let (j, b) = (col / m, col % m);
        let w = v[a].conj() * v[b] * val;
        if w != ZERO {
            entries.push((i, j, w));
        }
    }
    ComplexOperator::from_triplets(dim, entries, false)
}

fn check_dual_action(c: &CrossedTriple, characters: &[Character], cfg: CrossedConfig) -> Result<Vec<CheckRecord>> {
    let thr = c.base.tolerance().threshold(1.0);
    let window = c.interior(cfg.margin)?;
    let mut comm: (f64, Option<String>) = (0.0, None);
    let mut cov: (f64, Option<String>) = (0.0, None);
    for (k, chi) in characters.iter().enumerate() {
        let v = c.dual_action(chi)?;
        let r = max_entry(&commutator(&v, &c.dirac, false)?, &window)?;
        if r > comm.0 {
            comm = (r, Some(format!("character {k}")));
        }
        for (i, h) in c.generators(cfg.g_max) {
            let b = c.rep_term(&c.base.algebra_basis()[i], h)?;
            let lhs = crate::triples::conjugate(&v, &b);
            let rhs = b.scale(chi.value(h).conj());
            let r = max_entry(&(&lhs - &rhs), &window)?;
            if r > cov.0 {
                cov = (r, Some(format!("character {k}, {}", c.generator_label((i, h)))));
            }
        }
    }
    Ok(vec![
        CheckRecord::residual("dual_action.dirac_commutes", DUAL_ACTION_ANCHOR, comm.0, thr).with_optional_witness(comm.1),
        CheckRecord::residual("dual_action.covariance", "V_χ rep(aδ_g) V_χ* = conj(χ(g)) rep(aδ_g)", cov.0, thr)
            .with_optional_witness(cov.1),
    ])
}
