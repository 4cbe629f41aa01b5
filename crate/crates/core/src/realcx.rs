//! Real structures on the crossed triple.
//!
//! Antilinear bookkeeping: every antilinear map is stored as a matrix `M` with
//! action `v ↦ M·conj(v)`. The factors appearing in the case tables become
//!
//! | factor      | stored matrix |
//! |-------------|---------------|
//! | `cc`        | `1`           |
//! | `cc∘σ₁`     | `σ₁`          |
//! | `cc∘σ₂`     | `−σ₂`         |
//! | `cc∘σ₃`     | `σ₃`          |
//!
//! since `cc∘A = conj(A)∘cc` and only `σ₂` has imaginary entries. The auxiliary
//! map `j` on `H⊗ℓ²(G)` is
//!
//! * `Hat`: block `(g⁻¹, g)` equal to `u_g*·M_J`,
//! * `Tilde`: block `(g, g)` equal to `u_g·M_J`,
//!
//! where `M_J` is the stored matrix of the base `J`.

use crate::crossed::{build_crossed, corepresentation, unit_slot_projection, CrossedConfig, CrossedTriple, Parity, Representation};
use crate::error::{Error, Result};
use crate::groups::{self, classify_weight, Character, WeightClassification};
use crate::opalg::{assemble_blocks, commutator, relation_residual, tensor, ComplexOperator, C64};
use crate::report::CheckRecord;
use crate::triples::{classify_real_structure, order_condition, Sign, SignTriple, SpectralTripleData};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Unitarily invariant `J`, KO-dimension goes up by one.
    Hat,
    /// Twisted invariant `J`, KO-dimension goes down by one.
    Tilde,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Hat => "hat",
            Variant::Tilde => "tilde",
        }
    }
}

pub const AUX_J_ANCHOR: &str = "j maps A⋊_αG into its commutant";
pub const HAT_ANCHOR: &str = "real structure Ĵ of KO-dimension n+1";
pub const TILDE_ANCHOR: &str = "real structure J̃ of KO-dimension n−1";
pub const FIRST_ORDER_ANCHOR: &str = "also satisfies the first order condition";
pub const SECOND_ORDER_ANCHOR: &str = "also satisfies the second order condition";
pub const COACTION_J_ANCHOR: &str = "(J⊗*)U = U(J⊗1) on H⊗1";
pub const TWISTED_J_ANCHOR: &str = "jv_χ = v_χ*j";

/// `J u_g J⁻¹` against `u_g` (Hat) or `u_g*` (Tilde), worst over the group.
fn star_residual(base: &SpectralTripleData, variant: Variant, window: &ComplexOperator) -> Result<(f64, Option<usize>)> {
    let j = base.real_structure().ok_or(Error::MissingJ)?;
    let u = base.unitaries().ok_or(Error::MissingUnitaries)?;
    let thr = base.tolerance().threshold(1.0);
    let mut worst = (0.0f64, None);
    for g in u.group().elements_by_length() {
        let lhs = crate::triples::conjugate(j, u.get(g));
        let rhs = match variant {
            Variant::Hat => u.get(g).clone(),
            Variant::Tilde => u.get(g).adjoint(),
        };
        let r = relation_residual(&lhs, &rhs, Some(window))?;
        if r > thr && worst.1.is_none() {
            worst.1 = Some(g);
        }
        worst.0 = worst.0.max(r);
    }
    Ok(worst)
}

/// The auxiliary antiunitary `j` on `H⊗ℓ²(G)`.
pub fn build_aux_j(c: &CrossedTriple, variant: Variant, margin: usize) -> Result<ComplexOperator> {
    let base = c.base();
    let jb = base.real_structure().ok_or(Error::MissingJ)?;
    if !c.has_unitaries() {
        return Err(Error::MissingUnitaries);
    }
    if variant == Variant::Tilde && !c.group().is_abelian() {
        return Err(Error::GroupNotAbelian);
    }
    let (r, witness) = star_residual(base, variant, &base.interior(margin)?)?;
    if let Some(g) = witness {
        let want = match variant {
            Variant::Hat => "J u_g J⁻¹ = u_g",
            Variant::Tilde => "J u_g J⁻¹ = u_g*",
        };
        return Err(Error::WrongStarConvention(format!("{want} fails at g={} (residual {r:e})", c.group().label(g))));
    }
    let group = c.group();
    let blocks: Vec<(usize, usize, ComplexOperator)> = (0..group.order())
        .map(|g| match variant {
            Variant::Hat => (group.inverse(g), g, &c.unitary(g).adjoint() * jb),
            Variant::Tilde => (g, g, c.unitary(g) * jb),
        })
        .collect();
    assemble_blocks(base.dim(), group.order(), blocks.iter().map(|(r, c, b)| (*r, *c, b)), true)
}

/// The `ℂ²` factor of an odd-base table row, as a stored antilinear matrix.
fn doubling_factor(variant: Variant, n: u8) -> Result<ComplexOperator> {
    let m = match (variant, n % 4) {
        (Variant::Hat, 3) => ComplexOperator::identity(2)?,
        (Variant::Hat, 1) => -&ComplexOperator::sigma2(),
        (Variant::Tilde, 3) => ComplexOperator::sigma1(),
        (Variant::Tilde, 1) => ComplexOperator::sigma3(),
        _ => return Err(Error::TableRowMismatch(format!("odd-base {} row for n = {n}", variant.name()))),
    };
    Ok(m.with_antilinear(true))
}

/// Whether an even-base row composes `j` with `χ⊗1`.
fn even_row_uses_grading(variant: Variant, n: u8) -> Result<bool> {
    match (variant, n % 4) {
        (Variant::Hat, 0) | (Variant::Tilde, 2) => Ok(true),
        (Variant::Hat, 2) | (Variant::Tilde, 0) => Ok(false),
        _ => Err(Error::TableRowMismatch(format!("even-base {} row for n = {n}", variant.name()))),
    }
}

pub fn predicted_ko(variant: Variant, base_ko: u8) -> u8 {
    match variant {
        Variant::Hat => (base_ko + 1) % 8,
        Variant::Tilde => (base_ko + 7) % 8,
    }
}

/// The table row applied to `j`, as an antilinear operator on `Ĥ`.
pub fn table_row(c: &CrossedTriple, variant: Variant, base_ko: u8, j: &ComplexOperator) -> Result<ComplexOperator> {
    let out = match c.parity() {
        Parity::EvenFromOdd => {
            if base_ko % 2 == 0 {
                return Err(Error::TableRowMismatch(format!("odd base with even KO {base_ko}")));
            }
            tensor(j, &doubling_factor(variant, base_ko)?)?
        }
        Parity::OddFromEven => {
            if base_ko % 2 == 1 {
                return Err(Error::TableRowMismatch(format!("even base with odd KO {base_ko}")));
            }
            if even_row_uses_grading(variant, base_ko)? {
                let chi = c.base().grading().expect("even base");
                &tensor(chi, &ComplexOperator::identity(c.group().order())?)? * j
            } else {
                j.clone()
            }
        }
    };
    out.with_space(c.space().clone())
}

#[derive(Clone, Debug)]
pub struct RealCrossedStructure {
    crossed: CrossedTriple,
    variant: Variant,
    config: CrossedConfig,
    base_signs: SignTriple,
    base_ko: u8,
    aux_j: ComplexOperator,
    j_out: ComplexOperator,
    predicted_ko: u8,
    measured: SignTriple,
    weight_class: WeightClassification,
}

/// Builds `Ĵ` or `J̃` from the case table and measures its signs independently.
/// The crossed triple is taken in the `π̂₂⋊Γ̂` representation.
pub fn assemble_real_structure(c: &CrossedTriple, variant: Variant, cfg: CrossedConfig) -> Result<RealCrossedStructure> {
    let base = c.base();
    if base.real_structure().is_none() {
        return Err(Error::MissingJ);
    }
    let crossed = match c.representation() {
        Representation::Pi2Gamma => c.clone(),
        Representation::Pi1Lambda => build_crossed(base, c.group(), c.weight(), Representation::Pi2Gamma)?,
    };
    let weight_class = classify_weight(c.weight())?;
    match variant {
        Variant::Hat if !weight_class.homomorphism.holds => {
            return Err(Error::HypothesisNotMet(format!(
                "Hat needs a homomorphism weight; fails at {}",
                weight_class.homomorphism.witness.as_ref().map(|w| w.to_string()).unwrap_or_default()
            )))
        }
        Variant::Tilde if !c.group().is_abelian() => return Err(Error::GroupNotAbelian),
        Variant::Tilde if !weight_class.dirac.holds => {
            return Err(Error::HypothesisNotMet("Tilde needs a Dirac weight".into()));
        }
        _ => {}
    }
    let base_signs = classify_real_structure(base, &base.interior(cfg.margin)?)?;
    let base_ko = match base_signs.ko() {
        Some(k) if !has_undetermined(&base_signs) => k,
        _ => return Err(Error::AmbiguousBaseKO(base_signs.to_string())),
    };
    let aux_j = build_aux_j(&crossed, variant, cfg.margin)?;
    let j_out = table_row(&crossed, variant, base_ko, &aux_j)?;
    let predicted = predicted_ko(variant, base_ko);
    let t = crossed.as_triple(cfg.g_max, Some(&j_out))?;
    let measured = classify_real_structure(&t, &crossed.interior(cfg.margin)?)?;
    if measured.ko() != Some(predicted) || has_undetermined(&measured) {
        return Err(Error::KoMismatch { predicted, measured: measured.ko_dims.clone() });
    }
    Ok(RealCrossedStructure {
        crossed,
        variant,
        config: cfg,
        base_signs,
        base_ko,
        aux_j,
        j_out,
        predicted_ko: predicted,
        measured,
        weight_class,
    })
}

fn has_undetermined(s: &SignTriple) -> bool {
    s.eps == Sign::Undetermined || s.eps_prime == Sign::Undetermined || s.eps_dprime == Some(Sign::Undetermined)
}

impl RealCrossedStructure {
    pub fn crossed(&self) -> &CrossedTriple {
        &self.crossed
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> CrossedConfig {
        self.config
    }

    pub fn base_signs(&self) -> &SignTriple {
        &self.base_signs
    }

    pub fn base_ko(&self) -> u8 {
        self.base_ko
    }

    pub fn aux_j(&self) -> &ComplexOperator {
        &self.aux_j
    }

    pub fn j_out(&self) -> &ComplexOperator {
        &self.j_out
    }

    pub fn predicted_ko(&self) -> u8 {
        self.predicted_ko
    }

    pub fn measured(&self) -> &SignTriple {
        &self.measured
    }

    /// The crossed triple with `J_out` as its real structure and the crossed generators as basis.
    pub fn as_triple(&self) -> Result<SpectralTripleData> {
        self.crossed.as_triple(self.config.g_max, Some(&self.j_out))
    }

    fn anchor(&self) -> &'static str {
        match self.variant {
            Variant::Hat => HAT_ANCHOR,
            Variant::Tilde => TILDE_ANCHOR,
        }
    }

    /// One record per measured sign and one for the KO-dimension shift.
    pub fn ko_records(&self) -> Vec<CheckRecord> {
        let thr = self.crossed.base().tolerance().threshold(1.0);
        let names = ["real.eps", "real.eps_prime", "real.eps_dprime"];
        let signs = [Some(self.measured.eps), Some(self.measured.eps_prime), self.measured.eps_dprime];
        let mut out = Vec::new();
        for ((name, sign), (p, m)) in names.iter().zip(signs).zip(&self.measured.residuals) {
            let Some(s) = sign else { continue };
            let r = if s == Sign::Plus { *p } else { *m };
            out.push(CheckRecord::residual(*name, self.anchor(), r, thr).with_detail(format!("sign {s}")));
        }
        out.push(
            CheckRecord::flag("real.ko_shift", self.anchor(), self.measured.ko() == Some(self.predicted_ko)).with_detail(format!(
                "base KO {} -> predicted {}, measured {}",
                self.base_ko, self.predicted_ko, self.measured
            )),
        );
        out
    }
}

/// Properties of `j` on `H⊗ℓ²(G)`: isometry, `j² = ε`, zeroth order against
/// the crossed generators, `(D⊗1)j = ε′j(D⊗1)`, the grading sign, and the
/// weight relation of the variant.
pub fn check_aux_j(r: &RealCrossedStructure) -> Result<Vec<CheckRecord>> {
    let c = &r.crossed;
    let base = c.base();
    let cfg = r.config;
    let tol = base.tolerance();
    let thr = tol.threshold(1.0);
    let window = c.interior_half(cfg.margin)?;
    let j = &r.aux_j;
    let jinv = j.adjoint();
    let n = c.half_dim();
    let id = ComplexOperator::identity(n)?;
    let sign = |s: Sign| if s == Sign::Minus { -1.0 } else { 1.0 };
    let mut out = vec![CheckRecord::residual("aux_j.isometric", AUX_J_ANCHOR, j.unitarity_residual(), thr)];
    let jj = j * j;
    out.push(CheckRecord::residual(
        "aux_j.square",
        "If J² = ε then j² = ε",
        relation_residual(&jj, &id.scale_real(sign(r.base_signs.eps)), Some(&window))?,
        thr,
    ));
    let basis = base.algebra_basis();
    let gens = c.generators(cfg.g_max);
    let images: Vec<ComplexOperator> = gens.iter().map(|&(i, g)| c.rep_term_half(&basis[i], g)).collect::<Result<_>>()?;
    let mut zeroth: (f64, Option<String>) = (0.0, None);
    for (x, a) in images.iter().enumerate() {
        for (y, b) in images.iter().enumerate() {
            let v = commutator(a, &(&(j * b) * &jinv), false)?.compress(&window)?.max_abs();
            if v > zeroth.0 {
                zeroth = (v, Some(format!("({}, {})", c.generator_label(gens[x]), c.generator_label(gens[y]))));
            }
        }
    }
    out.push(CheckRecord::residual("aux_j.zeroth_order", AUX_J_ANCHOR, zeroth.0, thr).with_optional_witness(zeroth.1));
    let id_g = ComplexOperator::identity(c.group().order())?;
    let d1 = tensor(base.dirac(), &id_g)?;
    let lhs = &d1 * j;
    let rhs = (j * &d1).scale_real(sign(r.base_signs.eps_prime));
    out.push(CheckRecord::residual(
        "aux_j.dirac_sign",
        "(D⊗1)j = ε′j(D⊗1)",
        relation_residual(&lhs, &rhs, Some(&window))?,
        tol.threshold(base.dirac().max_abs()),
    ));
    if let (Some(chi), Some(s)) = (base.grading(), r.base_signs.eps_dprime) {
        let c1 = tensor(chi, &id_g)?;
        let res = relation_residual(&(&c1 * j), &(j * &c1).scale_real(sign(s)), Some(&window))?;
        out.push(CheckRecord::residual("aux_j.grading_sign", "(χ⊗1)j = ε″j(χ⊗1)", res, thr));
    }
    let m = tensor(&ComplexOperator::identity(base.dim())?, c.multiplication())?;
    let scale = c.multiplication().max_abs();
    let (id_rec, anchor, res) = match r.variant {
        Variant::Hat => {
            let res = relation_residual(&(&m * j), &-&(j * &m), Some(&window))?;
            ("aux_j.weight_anticommutes", "(1⊗M_l)j = −j(1⊗M_l)", res)
        }
        Variant::Tilde => {
            let im = m.scale(C64::new(0.0, 1.0));
            let res = relation_residual(&(&im * j), &-&(j * &im), Some(&window))?;
            ("aux_j.weight_anticommutes", "(i⊗M_l)j = −j(i⊗M_l)", res)
        }
    };
    let mut rec = CheckRecord::residual(id_rec, anchor, res, tol.threshold(scale));
    if r.variant == Variant::Hat && !r.weight_class.homomorphism.holds {
        rec = rec.report_only().with_detail("weight is not a homomorphism");
    }
    out.push(rec);
    Ok(out)
}

/// Order condition `order` on the crossed triple with `J_out`, over all pairs of generators.
pub fn check_crossed_order_conditions(r: &RealCrossedStructure, order: u8) -> Result<Vec<CheckRecord>> {
    let base = r.crossed.base();
    let cfg = r.config;
    if order >= 1 {
        match r.variant {
            Variant::Hat if !r.weight_class.homomorphism.holds => {
                return Err(Error::HypothesisNotMet("weight is not a homomorphism".into()));
            }
            Variant::Tilde if !r.weight_class.first_order.holds => {
                return Err(Error::HypothesisNotMet(format!(
                    "weight is not first order; witness {}",
                    r.weight_class.first_order.witness.as_ref().map(|w| w.to_string()).unwrap_or_default()
                )));
            }
            _ => {}
        }
    }
    if order == 2 {
        let o = order_condition(base, 1, &base.interior(cfg.margin)?)?;
        if !o.passed() {
            return Err(Error::HypothesisNotMet(format!("base fails the first order condition (residual {:e})", o.max_residual)));
        }
    }
    let t = r.as_triple()?;
    let o = order_condition(&t, order, &r.crossed.interior(cfg.margin)?)?;
    let anchor = match order {
        0 => AUX_J_ANCHOR,
        1 => FIRST_ORDER_ANCHOR,
        _ => SECOND_ORDER_ANCHOR,
    };
    let mut rec = CheckRecord::residual(format!("crossed.order{order}"), anchor, o.max_residual, o.threshold)
        .with_detail(format!("{} generator pairs", t.algebra_basis().len().pow(2)));
    if let Some(&(a, b, _)) = o.failing.first() {
        rec = rec
            .with_witness(format!("({}, {})", t.basis_labels()[a], t.basis_labels()[b]))
            .with_detail(format!("{} failing pairs", o.failing.len()));
    }
    let mut out = vec![rec];
    if order == 2 && r.crossed.parity() == Parity::EvenFromOdd {
        out.push(reduced_second_order(r)?);
    }
    Ok(out)
}

/// Second order for `D⊗1 + i(1⊗M_l)` and `j` on `H⊗ℓ²(G)`, the form in which
/// the doubling by `ℂ²` is replaced by scalars. Report-only: it shows which
/// part of the doubled condition the scalar computation accounts for.
fn reduced_second_order(r: &RealCrossedStructure) -> Result<CheckRecord> {
    let c = &r.crossed;
    let base = c.base();
    let cfg = r.config;
    let window = c.interior_half(cfg.margin)?;
    let id_g = ComplexOperator::identity(c.group().order())?;
    let m = tensor(&ComplexOperator::identity(base.dim())?, c.multiplication())?;
    let d = &tensor(base.dirac(), &id_g)? + &m.scale(C64::new(0.0, 1.0));
    let j = &r.aux_j;
    let jinv = j.adjoint();
    let gens = c.generators(cfg.g_max);
    let comms: Vec<ComplexOperator> = gens
        .iter()
        .map(|&(i, g)| commutator(&d, &c.rep_term_half(&base.algebra_basis()[i], g)?, false))
        .collect::<Result<_>>()?;
    let conj: Vec<ComplexOperator> = comms.iter().map(|b| &(j * b) * &jinv).collect();
    let mut worst = 0.0f64;
    for a in &comms {
        for b in &conj {
            worst = worst.max(commutator(a, b, false)?.compress(&window)?.max_abs());
        }
    }
    Ok(CheckRecord::residual("crossed.order2_reduced", SECOND_ORDER_ANCHOR, worst, base.tolerance().threshold(1.0))
        .report_only()
        .with_detail("D⊗1 + i⊗M_l on H⊗ℓ²(G), without the ℂ² factor"))
}

/// Hat on a finite group: `(J_out⊗*)W = W(J_out⊗cc)` on `Ĥ⊗δ_e`, with `W` the
/// corepresentation unitary. Whenever the group is abelian and characters are
/// given, also the dual-action relation: `J_out v_χ = v_χ J_out` for Hat,
/// `J_out v_χ = v_χ* J_out` for Tilde.
pub fn check_j_coaction_equivariance(r: &RealCrossedStructure, characters: &[Character]) -> Result<Vec<CheckRecord>> {
    let c = &r.crossed;
    let thr = c.base().tolerance().threshold(1.0);
    let mut out = Vec::new();
    match r.variant {
        Variant::Hat if c.group().is_finite() => {
            let w = corepresentation(c)?;
            let pe = unit_slot_projection(c)?;
            let star = groups::inversion(c.group())?;
            let lhs = &(&tensor(&r.j_out, &star)? * &w) * &pe;
            let cc = ComplexOperator::conjugation(c.group().order())?;
            let rhs = &(&w * &tensor(&r.j_out, &cc)?) * &pe;
            out.push(CheckRecord::residual("real.j_coaction", COACTION_J_ANCHOR, (&lhs - &rhs).max_abs(), thr));
        }
        Variant::Hat if characters.is_empty() => return Err(Error::GroupNotFinite),
        Variant::Tilde if !c.group().is_abelian() => return Err(Error::GroupNotAbelian),
        _ => {}
    }
    if !characters.is_empty() {
        if !c.group().is_abelian() {
            return Err(Error::GroupNotAbelian);
        }
        let window = c.interior(r.config.margin)?;
        let mut worst: (f64, Option<String>) = (0.0, None);
        for (k, chi) in characters.iter().enumerate() {
            let v = c.dual_action(chi)?;
            let lhs = &r.j_out * &v;
            let rhs = match r.variant {
                Variant::Hat => &v * &r.j_out,
                Variant::Tilde => &v.adjoint() * &r.j_out,
            };
            let res = relation_residual(&lhs, &rhs, Some(&window))?;
            if res > worst.0 || worst.1.is_none() {
                worst = (res, Some(format!("character {k}")));
            }
        }
        let (id, anchor) = match r.variant {
            Variant::Hat => ("real.j_dual_action", "Ĵv_χ = v_χĴ"),
            Variant::Tilde => ("real.j_twisted_dual_action", TWISTED_J_ANCHOR),
        };
        out.push(CheckRecord::residual(id, anchor, worst.0, thr).with_optional_witness(worst.1.filter(|_| worst.0 > thr)));
    }
    Ok(out)
}

/// For each `g`: `‖[D, u_g]‖` and the bound `‖DJ − ε′JD‖ + ‖Du_gJ − ε′u_gJD‖`.
/// From `(Du_g − u_gD)J = (Du_gJ − ε′u_gJD) − u_g(DJ − ε′JD)` the first never
/// exceeds the second, so `D` must be invariant when both relations hold.
#[derive(Clone, Debug, PartialEq)]
pub struct NecessityRow {
    pub g: usize,
    pub commutator: f64,
    pub bound: f64,
}

pub fn necessity_rows(t: &SpectralTripleData, eps_prime: Sign) -> Result<Vec<NecessityRow>> {
    let j = t.real_structure().ok_or(Error::MissingJ)?;
    let u = t.unitaries().ok_or(Error::MissingUnitaries)?;
    let d = t.dirac();
    let s = if eps_prime == Sign::Minus { -1.0 } else { 1.0 };
    let r1 = (&(d * j) - &(j * d).scale_real(s)).operator_norm();
    u.group()
        .elements_by_length()
        .into_iter()
        .map(|g| {
            let ug = u.get(g);
            let r2 = (&(&(d * ug) * j) - &(&(ug * j) * d).scale_real(s)).operator_norm();
            Ok(NecessityRow { g, commutator: commutator(d, ug, false)?.operator_norm(), bound: r1 + r2 })
        })
        .collect()
}

pub fn check_necessity(t: &SpectralTripleData, eps_prime: Sign) -> Result<Vec<CheckRecord>> {
    let rows = necessity_rows(t, eps_prime)?;
    let thr = t.tolerance().threshold(t.dirac().max_abs());
    let excess = rows.iter().map(|r| r.commutator - r.bound).fold(0.0f64, f64::max);
    Ok(vec![CheckRecord::residual(
        "real.necessity",
        "these two conditions together imply that D must be G-invariant",
        excess,
        thr,
    )])
}
