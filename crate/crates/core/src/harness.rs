//! Fixtures, suite orchestration and the helpers behind the `ncgx` CLI.
//!
//! A fixture is a JSON document describing a group, a weight, a base triple,
//! the unitaries implementing the action, and optional crossed-product,
//! real-structure and orientation data. Matrices are row-major arrays of
//! `[re, im]` pairs.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::crossed::{self, build_crossed, CrossedConfig, CrossedTriple, Parity, Representation};
use crate::error::{Error, Result};
use crate::groups::{self, classify_weight, Character, GroupHopfData, GroupModel, StarConvention, Weight};
use crate::hochschild::{self, AlgebraAction, BaseOrientation, BasedAlgebra, Evaluator, HochschildChain, Module};
use crate::opalg::{ComplexOperator, Tolerance, C64};
use crate::realcx::{self, RealCrossedStructure, Variant};
use crate::report::{CheckRecord, Report, PLUMBING};
use crate::triples::{self, group_triple, SpectralTripleData, Unitaries};

/// Largest crossed Hilbert-space dimension a fixture may request.
pub const DEFAULT_DIM_CAP: usize = 20_000;

const BUNDLED: [(&str, &str); 6] = [
    ("z2-basic", include_str!("../fixtures/z2-basic.json")),
    ("torus", include_str!("../fixtures/torus.json")),
    ("even-tilde", include_str!("../fixtures/even-tilde.json")),
    ("negative-firstorder", include_str!("../fixtures/negative-firstorder.json")),
    ("torus-tilde", include_str!("../fixtures/torus-tilde.json")),
    ("non-invariant-u", include_str!("../fixtures/non-invariant-u.json")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    WindowedZ {
        #[serde(rename = "N")]
        n: usize,
    },
    Cyclic {
        n: usize,
    },
    Symmetric3,
    Finite {
        table: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `l(k) = k` on a windowed group.
    Identity,
    Abs,
    Constant { value: f64 },
    Table { values: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JSpec {
    pub matrix: RawMatrix,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    /// `(ℂG, ℓ²(G), M_l, J_G)` on the fixture group, algebra generated by `λ_g`, `|g| <= radius`.
    GroupTriple {
        #[serde(default)]
        radius: Option<usize>,
    },
    Matrices {
        hilbert_dim: usize,
        #[serde(rename = "D")]
        dirac: RawMatrix,
        #[serde(default)]
        grading: Option<RawMatrix>,
        algebra_basis: Vec<RawMatrix>,
        #[serde(default)]
        basis_labels: Option<Vec<String>>,
        #[serde(rename = "J", default)]
        real: Option<JSpec>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum USpec {
    Trivial,
    /// `u_g δ_k = e^{iθgk}δ_k`; group-triple bases only.
    Rotation { theta: f64 },
    /// `u_g = e^{iθg}·1` on a windowed group.
    Phase { theta: f64 },
    /// Left translations `u_g = λ_g`; group-triple bases only.
    Translation,
    /// One matrix per group element, in element order.
    Table { matrices: Vec<RawMatrix> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    AdU,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StarSpec {
    Inverse,
    Identity,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RepSpec {
    Pi1Lambda,
    Pi2Gamma,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossedSpec {
    pub representation: RepSpec,
    #[serde(default)]
    pub parity: Option<String>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    Hat,
    Tilde,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Margins {
    #[serde(default)]
    pub base: Option<usize>,
    #[serde(default)]
    pub crossed: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: [f64; 2],
    pub indices: Vec<i64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationSpec {
    /// `plain` or `op_pair`.
    pub module: String,
    pub degree: usize,
    /// Indices are group integers for windowed group-triple bases, element
    /// indices for finite group-triple bases, and algebra-basis positions otherwise.
    pub terms: Vec<TermSpec>,
    /// Element with `l(g) ≠ 0`, in the same convention.
    pub g: i64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub group: GroupSpec,
    pub weight: WeightSpec,
    pub base: BaseSpec,
    #[serde(default)]
    pub u: Option<USpec>,
    #[serde(default)]
    pub action: Option<ActionSpec>,
    #[serde(default)]
    pub star: Option<StarSpec>,
    #[serde(default)]
    pub crossed: Option<CrossedSpec>,
    #[serde(default)]
    pub real_variant: Option<VariantSpec>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub margins: Margins,
    #[serde(default)]
    pub g_max: Option<usize>,
    /// Phases `φ` of characters `χ(k) = e^{iφk}` on windowed groups.
    #[serde(default)]
    pub characters: Vec<f64>,
    #[serde(default)]
    pub orientation: Option<OrientationSpec>,
    #[serde(default)]
    pub dim_cap: Option<usize>,
}

/// A validated fixture with its base triple built.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub spec: FixtureSpec,
    pub group: GroupModel,
    pub weight: Weight,
    pub base: SpectralTripleData,
    pub tolerance: Tolerance,
    pub base_margin: usize,
    pub crossed_config: CrossedConfig,
    pub characters: Vec<Character>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

/// Library errors raised while building a fixture are input errors.
fn as_schema(e: Error) -> Error {
    match e {
        Error::Schema(_) => e,
        other => Error::Schema(other.to_string()),
    }
}

fn matrix(m: &RawMatrix, dim: usize, antilinear: bool, what: &str) -> Result<ComplexOperator> {
    if m.len() != dim || m.iter().any(|r| r.len() != dim) {
        return Err(schema(format!("{what} must be {dim}×{dim}")));
    }
    let rows: Vec<Vec<C64>> = m.iter().map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect()).collect();
    ComplexOperator::from_rows(&rows, antilinear).map_err(as_schema)
}

impl Fixture {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: FixtureSpec = serde_json::from_str(s).map_err(|e| schema(e.to_string()))?;
        Self::from_spec(spec)
    }

    /// Reads a fixture file; a bundled fixture name is accepted when no such file exists.
    pub fn load(path: &str) -> Result<Self> {
        if !Path::new(path).exists() {
            if let Some(s) = bundled(path) {
                return Self::from_json_str(s);
            }
        }
        let s = std::fs::read_to_string(path).map_err(|e| schema(format!("{path}: {e}")))?;
        Self::from_json_str(&s)
    }

    pub fn from_spec(spec: FixtureSpec) -> Result<Self> {
        let group = match &spec.group {
            GroupSpec::WindowedZ { n } => GroupModel::windowed_z(*n),
            GroupSpec::Cyclic { n } => GroupModel::cyclic(*n),
            GroupSpec::Symmetric3 => Ok(GroupModel::symmetric3()),
            GroupSpec::Finite { table } => GroupModel::finite(table.clone()),
        }
        .map_err(as_schema)?;
        let weight = match &spec.weight {
            WeightSpec::Identity => Weight::inclusion(&group),
            WeightSpec::Abs => Weight::absolute(&group),
            WeightSpec::Constant { value } => Weight::constant(&group, *value),
            WeightSpec::Table { values } => Weight::from_values(&group, values.clone()),
        }
        .map_err(as_schema)?;
        let tol = spec.tolerance.unwrap_or(1e-9);
        let tolerance = Tolerance::absolute(tol).map_err(as_schema)?;
        if let Some(p) = spec.crossed.as_ref().and_then(|c| c.parity.as_deref()) {
            if p != "auto" {
                return Err(schema(format!("parity must be \"auto\", got {p:?}")));
            }
        }

        let mut base = match &spec.base {
            BaseSpec::GroupTriple { radius } => group_triple(&group, &weight, *radius, tolerance).map_err(as_schema)?,
            BaseSpec::Matrices { hilbert_dim, dirac, grading, algebra_basis, basis_labels, real } => {
                let d = *hilbert_dim;
                if d == 0 {
                    return Err(schema("hilbert_dim must be positive"));
                }
                let basis = algebra_basis
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix(m, d, false, &format!("algebra_basis[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                if basis.is_empty() {
                    return Err(schema("algebra_basis is empty"));
                }
                let mut t = SpectralTripleData::new(matrix(dirac, d, false, "D")?, basis, tolerance).map_err(as_schema)?;
                if let Some(labels) = basis_labels {
                    t = t.with_basis_labels(labels.clone()).map_err(as_schema)?;
                }
                if let Some(chi) = grading {
                    t = t.with_grading(matrix(chi, d, false, "grading")?).map_err(as_schema)?;
                }
                if let Some(j) = real {
                    t = t.with_real_structure(matrix(&j.matrix, d, true, "J")?).map_err(as_schema)?;
                }
                t
            }
        };

        if spec.action.is_some() && spec.u.is_none() {
            return Err(schema("action {\"kind\":\"ad_u\"} needs u"));
        }
        if let Some(u) = &spec.u {
            let is_group_base = matches!(spec.base, BaseSpec::GroupTriple { .. });
            let unitaries = match u {
                USpec::Trivial => Unitaries::trivial(&group, base.dim()),
                USpec::Phase { theta } => Unitaries::phase(&group, base.dim(), *theta),
                USpec::Rotation { theta } if is_group_base => Unitaries::rotation(&group, &group, *theta),
                USpec::Translation if is_group_base => Unitaries::new(
                    &group,
                    (0..group.order()).map(|g| groups::left_translation(&group, g)).collect::<Result<_>>()?,
                ),
                USpec::Rotation { .. } | USpec::Translation => {
                    return Err(schema("rotation and translation unitaries need a group_triple base"))
                }
                USpec::Table { matrices } => {
                    if matrices.len() != group.order() {
                        return Err(schema(format!("{} unitaries for a group of order {}", matrices.len(), group.order())));
                    }
                    let ops = matrices
                        .iter()
                        .enumerate()
                        .map(|(g, m)| matrix(m, base.dim(), false, &format!("u[{g}]")))
                        .collect::<Result<Vec<_>>>()?;
                    Unitaries::new(&group, ops)
                }
            }
            .map_err(as_schema)?;
            base = base.with_unitaries(unitaries).map_err(as_schema)?;
        }

        if spec.crossed.as_ref().is_some_and(|c| c.representation == RepSpec::Pi2Gamma) && spec.u.is_none() {
            return Err(schema("pi2_gamma needs u"));
        }
        if spec.real_variant.is_some() && base.real_structure().is_none() {
            return Err(schema("real_variant needs J on the base"));
        }
        if spec.orientation.is_some() && spec.real_variant != Some(VariantSpec::Hat) {
            return Err(schema("orientation needs real_variant \"hat\""));
        }

        let doubling = if base.is_even() { 1 } else { 2 };
        let crossed_dim = base.dim() * group.order() * doubling;
        let cap = spec.dim_cap.unwrap_or(DEFAULT_DIM_CAP);
        if crossed_dim > cap {
            return Err(schema(format!("crossed dimension {crossed_dim} exceeds the cap {cap}")));
        }

        let g_max = spec.g_max.unwrap_or(2);
        let mut crossed_config = CrossedConfig::for_g_max(g_max);
        if let Some(m) = spec.margins.crossed {
            crossed_config.margin = m;
        }
        let base_margin = spec.margins.base.unwrap_or(2);
        if let Some(n) = group.window() {
            for m in [base_margin, crossed_config.margin] {
                if m >= n {
                    return Err(schema(format!("margin {m} leaves no interior in a window of size {n}")));
                }
            }
        }
        let characters = spec
            .characters
            .iter()
            .map(|&phi| Character::windowed_phase(&group, phi))
            .collect::<Result<Vec<_>>>()
            .map_err(as_schema)?;
        Ok(Self { spec, group, weight, base, tolerance, base_margin, crossed_config, characters })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    /// Replaces the absolute tolerance everywhere.
    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        self.tolerance = Tolerance::absolute(tol).map_err(as_schema)?;
        self.base = self.base.with_tolerance(self.tolerance);
        Ok(self)
    }

    pub fn base_window(&self) -> Result<ComplexOperator> {
        self.base.interior(self.base_margin)
    }

    pub fn representation(&self) -> Representation {
        match self.spec.crossed.as_ref().map(|c| c.representation) {
            Some(RepSpec::Pi1Lambda) => Representation::Pi1Lambda,
            Some(RepSpec::Pi2Gamma) => Representation::Pi2Gamma,
            None if self.base.unitaries().is_some() => Representation::Pi2Gamma,
            None => Representation::Pi1Lambda,
        }
    }

    pub fn crossed(&self) -> Result<CrossedTriple> {
        build_crossed(&self.base, &self.group, &self.weight, self.representation())
    }

    pub fn variant(&self) -> Option<Variant> {
        self.spec.real_variant.map(|v| match v {
            VariantSpec::Hat => Variant::Hat,
            VariantSpec::Tilde => Variant::Tilde,
        })
    }

    pub fn real(&self) -> Result<Option<RealCrossedStructure>> {
        match self.variant() {
            None => Ok(None),
            Some(v) => realcx::assemble_real_structure(&self.crossed()?, v, self.crossed_config).map(Some),
        }
    }

    fn is_group_base(&self) -> bool {
        matches!(self.spec.base, BaseSpec::GroupTriple { .. })
    }

    /// Group element from an integer (windowed) or an element index (finite).
    pub fn element(&self, k: i64) -> Result<usize> {
        if self.group.window().is_some() {
            self.group.from_integer(k).ok_or_else(|| schema(format!("element {k} outside the window")))
        } else {
            usize::try_from(k)
                .ok()
                .filter(|&g| g < self.group.order())
                .ok_or_else(|| schema(format!("element {k} outside a group of order {}", self.group.order())))
        }
    }

    /// The based algebra used for chains over the base.
    pub fn base_algebra(&self) -> Result<Arc<BasedAlgebra>> {
        if self.is_group_base() {
            Ok(BasedAlgebra::group_algebra(&self.group))
        } else {
            BasedAlgebra::from_basis(
                self.base.algebra_basis().to_vec(),
                self.base.basis_labels().to_vec(),
                self.tolerance.threshold(1.0),
            )
        }
    }

    fn base_index(&self, k: i64, dim: usize) -> Result<usize> {
        if self.is_group_base() {
            self.element(k)
        } else {
            usize::try_from(k).ok().filter(|&i| i < dim).ok_or_else(|| schema(format!("basis index {k} out of range")))
        }
    }

    /// The base orientation chain from the fixture.
    pub fn orientation_chain(&self, alg: &Arc<BasedAlgebra>) -> Result<Option<HochschildChain>> {
        let Some(o) = &self.spec.orientation else { return Ok(None) };
        let module = match o.module.as_str() {
            "plain" => Module::Plain,
            "op_pair" => Module::OpPair,
            other => return Err(schema(format!("unknown chain module {other:?}"))),
        };
        let mut c = HochschildChain::zero(alg, module, o.degree);
        for t in &o.terms {
            let key = t.indices.iter().map(|&k| self.base_index(k, alg.dim())).collect::<Result<Vec<_>>>()?;
            c.add_term(key, C64::new(t.coeff[0], t.coeff[1])).map_err(as_schema)?;
        }
        Ok(Some(c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Axioms,
    Real,
    Orders,
    Crossed,
    Orientation,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "axioms" => Suite::Axioms,
            "real" => Suite::Real,
            "orders" => Suite::Orders,
            "crossed" => Suite::Crossed,
            "orientation" => Suite::Orientation,
            "all" => Suite::All,
            other => return Err(schema(format!("unknown suite {other:?}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Real => "real",
            Suite::Orders => "orders",
            Suite::Crossed => "crossed",
            Suite::Orientation => "orientation",
            Suite::All => "all",
        }
    }

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Axioms, Suite::Real, Suite::Orders, Suite::Crossed, Suite::Orientation],
            s => vec![s],
        }
    }
}

/// Runs `f` and stamps the elapsed time on its records. An error becomes a
/// single failing record carrying the message; schema errors propagate.
fn timed<F>(report: &mut Report, id: &str, f: F) -> Result<()>
where
    F: FnOnce() -> Result<Vec<CheckRecord>>,
{
    let start = Instant::now();
    let out = f();
    let ms = start.elapsed().as_secs_f64() * 1e3;
    match out {
        Ok(mut recs) => {
            for r in &mut recs {
                r.wall_time_ms = Some(ms);
            }
            report.extend(recs);
            Ok(())
        }
        Err(e @ Error::Schema(_)) => Err(e),
        Err(e) => {
            let mut r = CheckRecord::flag(format!("{id}.error"), PLUMBING, false).with_detail(e.to_string());
            r.wall_time_ms = Some(ms);
            report.push(r);
            Ok(())
        }
    }
}

fn prefixed(prefix: &str, recs: Vec<CheckRecord>) -> Vec<CheckRecord> {
    recs.into_iter()
        .map(|mut r| {
            r.id = format!("{prefix}.{}", r.id);
            r
        })
        .collect()
}

fn skipped(id: &str, why: impl Into<String>) -> CheckRecord {
    CheckRecord::flag(id, PLUMBING, true).report_only().with_detail(format!("skipped: {}", why.into()))
}

/// Runs a suite. Checks run in dependency order: axioms, real, orders, crossed, orientation.
pub fn run_suite(f: &Fixture, suite: Suite, seed: u64) -> Result<Report> {
    let mut report = Report::new(f.name(), suite.name(), seed);
    let mut real_cache: Option<std::result::Result<RealCrossedStructure, String>> = None;
    let mut real = |f: &Fixture| -> std::result::Result<RealCrossedStructure, String> {
        real_cache
            .get_or_insert_with(|| match f.real() {
                Ok(Some(r)) => Ok(r),
                Ok(None) => Err("no real_variant".into()),
                Err(e) => Err(e.to_string()),
            })
            .clone()
    };
    for part in suite.parts() {
        match part {
            Suite::Axioms => axioms(f, &mut report)?,
            Suite::Real => real_suite(f, &mut report, &mut real)?,
            Suite::Orders => orders(f, &mut report, &mut real)?,
            Suite::Crossed => crossed_suite(f, &mut report)?,
            Suite::Orientation => orientation_suite(f, &mut report, &mut real, seed)?,
            Suite::All => unreachable!(),
        }
    }
    Ok(report)
}

fn axioms(f: &Fixture, report: &mut Report) -> Result<()> {
    let window = f.base_window()?;
    timed(report, "base.axioms", || Ok(prefixed("base", triples::verify_axioms(&f.base, &window)?)))?;
    timed(report, "weight", || {
        let c = classify_weight(&f.weight)?;
        let flag = |id: &str, fl: &groups::Flag| {
            CheckRecord::flag(format!("weight.{id}"), "l is either a constant or a homomorphism", fl.holds)
                .report_only()
                .with_optional_witness(fl.witness.as_ref().map(|w| w.to_string()))
        };
        Ok(vec![
            flag("dirac", &c.dirac),
            flag("first_order", &c.first_order),
            flag("homomorphism", &c.homomorphism),
            flag("constant", &c.constant),
        ])
    })?;
    if !f.base.is_windowed() {
        timed(report, "base.nondegenerate", || {
            Ok(prefixed("base", triples::check_nondegenerate(&f.base)?).into_iter().map(CheckRecord::report_only).collect())
        })?;
    }
    if f.base.unitaries().is_some() {
        let star = match f.spec.star.unwrap_or(StarSpec::Inverse) {
            StarSpec::Inverse => StarConvention::InverseStar,
            StarSpec::Identity => StarConvention::IdentityStar,
        };
        let hopf = GroupHopfData::new(&f.group, star).map_err(as_schema)?;
        timed(report, "base.equivariance", || Ok(prefixed("base", triples::check_equivariance(&f.base, &hopf, &window)?)))?;
    }
    Ok(())
}

type RealFn<'a> = dyn FnMut(&Fixture) -> std::result::Result<RealCrossedStructure, String> + 'a;

fn real_suite(f: &Fixture, report: &mut Report, real: &mut RealFn<'_>) -> Result<()> {
    if f.base.real_structure().is_none() {
        report.push(skipped("real", "the base has no J"));
        return Ok(());
    }
    let window = f.base_window()?;
    timed(report, "real.base", || {
        let s = triples::classify_real_structure(&f.base, &window)?;
        let detail = format!("signs ({}, {}, {})", s.eps, s.eps_prime, s.eps_dprime.map_or("absent".into(), |x| x.to_string()));
        let mut rec = CheckRecord::residual("real.base_ko", triples::REAL_ANCHOR, s.max_selected_residual(), f.tolerance.threshold(1.0))
            .with_detail(format!("{detail}, KO {:?}", s.ko_dims));
        if s.ko().is_none() {
            rec.pass = false;
        }
        Ok(vec![rec])
    })?;
    if f.variant().is_none() {
        return Ok(());
    }
    match real(f) {
        Err(e) => report.push(CheckRecord::flag("real.assemble", realcx::HAT_ANCHOR, false).with_detail(e)),
        Ok(r) => {
            report.extend(r.ko_records());
            timed(report, "real.aux_j", || realcx::check_aux_j(&r))?;
            let finite_or_chars = f.group.is_finite() || !f.characters.is_empty();
            if finite_or_chars {
                timed(report, "real.equivariance", || realcx::check_j_coaction_equivariance(&r, &f.characters))?;
            }
            if f.base.unitaries().is_some() {
                let base_signs = r.base_signs().clone();
                timed(report, "real.necessity", || {
                    Ok(realcx::check_necessity(&f.base, base_signs.eps_prime)?.into_iter().map(|x| x.report_only()).collect())
                })?;
            }
        }
    }
    Ok(())
}

fn orders(f: &Fixture, report: &mut Report, real: &mut RealFn<'_>) -> Result<()> {
    if f.base.real_structure().is_none() {
        report.push(skipped("orders", "the base has no J"));
        return Ok(());
    }
    let window = f.base_window()?;
    for k in 0..=2u8 {
        timed(report, &format!("base.order{k}"), || Ok(prefixed("base", triples::check_order_condition(&f.base, k, &window)?)))?;
    }
    if f.variant().is_none() {
        return Ok(());
    }
    let r = match real(f) {
        Ok(r) => r,
        Err(e) => {
            report.push(skipped("crossed.orders", format!("no crossed real structure: {e}")));
            return Ok(());
        }
    };
    for k in 0..=2u8 {
        let id = format!("crossed.order{k}");
        let start = Instant::now();
        match realcx::check_crossed_order_conditions(&r, k) {
            Ok(mut recs) => {
                let ms = start.elapsed().as_secs_f64() * 1e3;
                recs.iter_mut().for_each(|x| x.wall_time_ms = Some(ms));
                report.extend(recs);
            }
            Err(Error::HypothesisNotMet(msg)) => report.push(skipped(&id, msg)),
            Err(e) => report.push(CheckRecord::flag(format!("{id}.error"), PLUMBING, false).with_detail(e.to_string())),
        }
    }
    Ok(())
}

fn crossed_suite(f: &Fixture, report: &mut Report) -> Result<()> {
    let cfg = f.crossed_config;
    let c = match f.crossed() {
        Ok(c) => c,
        Err(e) => {
            report.push(CheckRecord::flag("crossed.build", crossed::CONSTRUCTION_ANCHOR, false).with_detail(e.to_string()));
            return Ok(());
        }
    };
    timed(report, "crossed.construction", || crossed::check_construction(&c, cfg))?;
    timed(report, "crossed.commutators", || crossed::check_commutator_identities(&c, cfg))?;
    timed(report, "crossed.representation", || crossed::check_representation(&c, cfg))?;
    if f.base.unitaries().is_some() {
        timed(report, "crossed.equicontinuity", || crossed::check_equicontinuity(&f.base, &f.group, cfg.margin))?;
        timed(report, "crossed.intertwiner", || crossed::check_intertwiner(&c, cfg))?;
    }
    timed(report, "crossed.dual", || crossed::check_dual_symmetry(&c, &f.characters, cfg))?;
    Ok(())
}

/// `ĉ` for the fixture's base cycle at element `g` (fixture convention).
pub fn build_fixture_orientation(f: &Fixture, r: &RealCrossedStructure, g: usize) -> Result<HochschildChain> {
    let alg = f.base_algebra()?;
    let c = f.orientation_chain(&alg)?.ok_or_else(|| schema("fixture has no orientation chain"))?;
    let (crossed_alg, q) = crossed_algebras(f, &alg)?;
    let id = ComplexOperator::identity(f.base.dim())?;
    let even = f.base.is_even();
    let chi = if even { f.base.grading().expect("even base has a grading").clone() } else { id };
    let window = f.base.interior(r.config().margin)?;
    let mut ev = Evaluator::for_algebra(&alg, None, f.base.dirac(), f.base.real_structure());
    let bo = BaseOrientation { evaluator: &mut ev, chi: &chi, even, window: &window, tolerance: f.tolerance.threshold(1.0) };
    hochschild::build_orientation(&c, &crossed_alg, &q, &f.weight, g, bo)
}

fn crossed_algebras(f: &Fixture, alg: &Arc<BasedAlgebra>) -> Result<(Arc<BasedAlgebra>, Arc<BasedAlgebra>)> {
    let action = match f.base.unitaries() {
        Some(u) => AlgebraAction::from_unitaries(alg, u, f.tolerance.threshold(1.0))?,
        None => AlgebraAction::trivial(alg, &f.group),
    };
    Ok((BasedAlgebra::crossed(alg, action)?, BasedAlgebra::group_algebra(&f.group)))
}

/// `b(ĉ) = 0`, `π_D̂(ĉ) = χ̂` and dual invariance.
pub fn check_fixture_orientation(f: &Fixture, r: &RealCrossedStructure, chat: &HochschildChain) -> Result<Vec<CheckRecord>> {
    let rc = r.crossed();
    let chi_hat = match rc.parity() {
        Parity::EvenFromOdd => rc.grading().expect("even crossed triple has a grading").clone(),
        Parity::OddFromEven => ComplexOperator::identity(rc.dim())?,
    };
    let crossed_alg = chat.algebra().clone();
    let mut ev = Evaluator::for_algebra(&crossed_alg, Some(rc), rc.dirac(), Some(r.j_out()));
    hochschild::check_orientation(chat, &mut ev, &chi_hat, &rc.interior(r.config().margin)?, &f.characters, f.tolerance.threshold(1.0))
}

/// `b∘b = 0` on seeded random chains over the base algebra, degrees 0..=4.
pub fn boundary_square_record(alg: &Arc<BasedAlgebra>, seed: u64, samples: usize) -> Result<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<usize> = match alg.group().filter(|g| g.window().is_some()) {
        Some(g) => g.ball(1),
        None => (0..alg.dim()).collect(),
    };
    let mut worst = 0.0f64;
    for s in 0..samples {
        let degree = s % 5;
        for module in [Module::Plain, Module::OpPair] {
            let c = hochschild::random_chain_from(alg, module, degree, 6, 3, &mut rng, |r| pool[r.gen_range(0..pool.len())])?;
            worst = worst.max(hochschild::boundary(&hochschild::boundary(&c)?)?.max_abs());
        }
    }
    Ok(CheckRecord::residual("hochschild.boundary_square", hochschild::BOUNDARY_ANCHOR, worst, 0.0)
        .with_detail(format!("{samples} seeded chains per module")))
}

fn orientation_suite(f: &Fixture, report: &mut Report, real: &mut RealFn<'_>, seed: u64) -> Result<()> {
    let alg = match f.base_algebra() {
        Ok(a) => a,
        Err(e) => {
            report.push(skipped("orientation", format!("base algebra has no finite basis: {e}")));
            return Ok(());
        }
    };
    timed(report, "hochschild", || Ok(vec![boundary_square_record(&alg, seed, 20)?]))?;
    let Some(o) = &f.spec.orientation else {
        report.push(skipped("orientation", "no orientation chain in the fixture"));
        return Ok(());
    };
    let g = f.element(o.g)?;
    let r = match real(f) {
        Ok(r) => r,
        Err(e) => {
            report.push(CheckRecord::flag("orientation.build", hochschild::ORIENTATION_ANCHOR, false).with_detail(e));
            return Ok(());
        }
    };
    timed(report, "orientation", || {
        let chat = build_fixture_orientation(f, &r, g)?;
        check_fixture_orientation(f, &r, &chat)
    })
}

/// Base and crossed KO data as a report.
pub fn ko_report(f: &Fixture) -> Result<Report> {
    if f.base.real_structure().is_none() {
        return Err(schema("ko needs J on the base"));
    }
    let mut report = Report::new(f.name(), "ko", 0);
    let mut real = |f: &Fixture| match f.real() {
        Ok(Some(r)) => Ok(r),
        Ok(None) => Err("no real_variant".to_string()),
        Err(e) => Err(e.to_string()),
    };
    real_suite(f, &mut report, &mut real)?;
    let keep: Vec<CheckRecord> =
        report.records.iter().filter(|r| r.id == "real.base_ko" || r.id.starts_with("real.eps") || r.id == "real.ko_shift" || r.id == "real.assemble").cloned().collect();
    let mut out = Report::new(f.name(), "ko", 0);
    out.extend(keep);
    Ok(out)
}

/// Builds and checks `ĉ`, optionally at a different element than the fixture's.
pub fn orient(f: &Fixture, g: Option<usize>) -> Result<(HochschildChain, Report)> {
    let o = f.spec.orientation.as_ref().ok_or_else(|| schema("fixture has no orientation chain"))?;
    let g = match g {
        Some(g) => g,
        None => f.element(o.g)?,
    };
    let r = f.real()?.ok_or_else(|| schema("orientation needs real_variant"))?;
    let chat = build_fixture_orientation(f, &r, g)?;
    let mut report = Report::new(f.name(), "orient", 0);
    report.extend(check_fixture_orientation(f, &r, &chat)?);
    Ok((chat, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixtures_load() {
        for name in bundled_names() {
            let f = Fixture::from_json_str(bundled(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(f.name(), name);
        }
    }

    #[test]
    fn malformed_and_inconsistent_inputs_are_schema_errors() {
        assert!(matches!(Fixture::from_json_str("{"), Err(Error::Schema(_))));
        let bad_dim = r#"{"name":"x","group":{"kind":"cyclic","n":2},"weight":{"kind":"constant","value":0},
            "base":{"kind":"matrices","hilbert_dim":2,"D":[[[0,0]]],"algebra_basis":[]}}"#;
        assert!(matches!(Fixture::from_json_str(bad_dim), Err(Error::Schema(_))));
        let big = r#"{"name":"x","group":{"kind":"windowed_z","N":40},"weight":{"kind":"identity"},
            "base":{"kind":"group_triple"},"dim_cap":100}"#;
        assert!(matches!(Fixture::from_json_str(big), Err(Error::Schema(_))));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in ["axioms", "real", "orders", "crossed", "orientation", "all"] {
            assert_eq!(Suite::parse(s).unwrap().name(), s);
        }
        assert!(Suite::parse("nope").is_err());
    }
}
