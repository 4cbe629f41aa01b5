//! Hochschild chains over algebras with an explicit basis.
//!
//! A chain is a sparse map from index tuples to coefficients. Plain chains
//! (`M = A`) use keys `[m, a₁, …, aₙ]`; chains with coefficients in `A⊗A^op`
//! use `[m, p, a₁, …, aₙ]` with `p` the op-slot. Tensor slots holding a linear
//! combination are expanded multilinearly, so equality of chains is plain
//! coefficient comparison.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::Rng;
use serde_json::{json, Value};

use crate::crossed::CrossedTriple;
use crate::error::{Error, Result};
use crate::groups::{self, Character, GroupModel, Weight};
use crate::opalg::{commutator, relation_residual, span_coordinates, ComplexOperator, C64, ONE, ZERO};
use crate::report::CheckRecord;
use crate::triples::Unitaries;

/// Sparse coordinate vector in an algebra basis.
pub type Sparse = Vec<(usize, C64)>;

/// Coefficients within this distance of a Gaussian integer are snapped to it,
/// so matrix-unit and permutation bases give exact structure constants.
const SNAP: f64 = 1e-12;

fn snap(c: C64) -> C64 {
    let r = |x: f64| if (x - x.round()).abs() < SNAP { x.round() } else { x };
    C64::new(r(c.re), r(c.im))
}

fn sparse_from_dense(v: &[C64]) -> Sparse {
    v.iter().enumerate().map(|(i, c)| (i, snap(*c))).filter(|(_, c)| *c != ZERO).collect()
}

/// `g ↦ (α_g(e_j) in the basis)` for every basis element `e_j`.
#[derive(Clone, Debug)]
pub struct AlgebraAction {
    group: GroupModel,
    coords: Vec<Vec<Sparse>>,
}

impl AlgebraAction {
    pub fn trivial(algebra: &BasedAlgebra, group: &GroupModel) -> Self {
        let id: Vec<Sparse> = (0..algebra.dim()).map(|j| vec![(j, ONE)]).collect();
        Self { group: group.clone(), coords: vec![id; group.order()] }
    }

    /// `α_g = Ad u_g`, expressed in the basis through its representation.
    pub fn from_unitaries(algebra: &BasedAlgebra, u: &Unitaries, tol: f64) -> Result<Self> {
        let reps: Vec<ComplexOperator> = (0..algebra.dim()).map(|i| algebra.represent(i, None)).collect::<Result<_>>()?;
        let mut coords = Vec::with_capacity(u.group().order());
        for g in 0..u.group().order() {
            let mut row = Vec::with_capacity(reps.len());
            for (j, a) in reps.iter().enumerate() {
                let (c, r) = span_coordinates(&reps, &u.alpha(g, a), None)?;
                if r > tol {
                    return Err(Error::ActionDoesNotPreserveAlgebra { g: u.group().label(g), basis: j, residual: r });
                }
                row.push(sparse_from_dense(&c));
            }
            coords.push(row);
        }
        Ok(Self { group: u.group().clone(), coords })
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn apply(&self, g: usize, j: usize) -> &Sparse {
        &self.coords[g][j]
    }

    /// `α_g` on a sparse vector.
    pub fn apply_sparse(&self, g: usize, v: &Sparse) -> Sparse {
        let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
        for &(j, c) in v {
            for &(k, d) in &self.coords[g][j] {
                *acc.entry(k).or_insert(ZERO) += c * d;
            }
        }
        acc.into_iter().filter(|(_, c)| *c != ZERO).collect()
    }
}

#[derive(Clone, Debug)]
pub enum AlgebraKind {
    /// A finite basis of matrices closed under products.
    Table { basis: Vec<ComplexOperator>, products: Vec<Vec<Sparse>>, unit: Sparse },
    /// `ℂG` with basis `δ_g` in element order, represented by left translations.
    GroupAlgebra { group: GroupModel },
    /// `A⋊G` with basis `e_iδ_g` at index `i·|G| + g`.
    Crossed { base: Arc<BasedAlgebra>, action: AlgebraAction },
}

#[derive(Clone, Debug)]
pub struct BasedAlgebra {
    kind: AlgebraKind,
    labels: Vec<String>,
}

impl BasedAlgebra {
    /// Structure constants from least squares; fails if a product leaves the span
    /// or the identity is not in it.
    pub fn from_basis(basis: Vec<ComplexOperator>, labels: Vec<String>, tol: f64) -> Result<Arc<Self>> {
        if basis.is_empty() || labels.len() != basis.len() {
            return Err(Error::AlgebraMismatch("basis and labels must be non-empty and of equal length".into()));
        }
        let mut products = Vec::with_capacity(basis.len());
        for (i, a) in basis.iter().enumerate() {
            let mut row = Vec::with_capacity(basis.len());
            for (j, b) in basis.iter().enumerate() {
                let (c, r) = span_coordinates(&basis, &(a * b), None)?;
                if r > tol {
                    return Err(Error::AlgebraMismatch(format!("{}·{} leaves the span (residual {r:e})", labels[i], labels[j])));
                }
                row.push(sparse_from_dense(&c));
            }
            products.push(row);
        }
        let (u, r) = span_coordinates(&basis, &ComplexOperator::identity(basis[0].dim())?, None)?;
        if r > tol {
            return Err(Error::AlgebraMismatch(format!("identity is not in the span (residual {r:e})")));
        }
        Ok(Arc::new(Self { kind: AlgebraKind::Table { basis, products, unit: sparse_from_dense(&u) }, labels }))
    }

    pub fn group_algebra(group: &GroupModel) -> Arc<Self> {
        let labels = (0..group.order()).map(|g| format!("δ_{}", group.label(g))).collect();
        Arc::new(Self { kind: AlgebraKind::GroupAlgebra { group: group.clone() }, labels })
    }

    pub fn crossed(base: &Arc<BasedAlgebra>, action: AlgebraAction) -> Result<Arc<Self>> {
        if action.coords.first().map_or(0, |r| r.len()) != base.dim() {
            return Err(Error::AlgebraMismatch("action and base algebra have different dimensions".into()));
        }
        let g = action.group();
        let mut labels = Vec::with_capacity(base.dim() * g.order());
        for i in 0..base.dim() {
            for h in 0..g.order() {
                labels.push(format!("{}δ_{}", base.labels[i], g.label(h)));
            }
        }
        Ok(Arc::new(Self { kind: AlgebraKind::Crossed { base: base.clone(), action }, labels }))
    }

    pub fn kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Coordinates of the unit.
    pub fn unit(&self) -> Sparse {
        match &self.kind {
            AlgebraKind::Table { unit, .. } => unit.clone(),
            AlgebraKind::GroupAlgebra { group } => vec![(group.identity(), ONE)],
            AlgebraKind::Crossed { base, action } => {
                let e = action.group().identity();
                base.unit().into_iter().map(|(i, c)| (i * action.group().order() + e, c)).collect()
            }
        }
    }

    /// For a crossed algebra: `(base index, group element)` of a basis index.
    pub fn split(&self, k: usize) -> Option<(usize, usize)> {
        match &self.kind {
            AlgebraKind::Crossed { action, .. } => Some((k / action.group().order(), k % action.group().order())),
            _ => None,
        }
    }

    /// For a crossed algebra: index of `e_iδ_g`.
    pub fn join(&self, i: usize, g: usize) -> Result<usize> {
        match &self.kind {
            AlgebraKind::Crossed { action, .. } => Ok(i * action.group().order() + g),
            _ => Err(Error::AlgebraMismatch("not a crossed-product algebra".into())),
        }
    }

    pub fn crossed_parts(&self) -> Option<(&Arc<BasedAlgebra>, &AlgebraAction)> {
        match &self.kind {
            AlgebraKind::Crossed { base, action } => Some((base, action)),
            _ => None,
        }
    }

    /// The group carried by a group algebra or crossed product.
    pub fn group(&self) -> Option<&GroupModel> {
        match &self.kind {
            AlgebraKind::GroupAlgebra { group } => Some(group),
            AlgebraKind::Crossed { action, .. } => Some(action.group()),
            AlgebraKind::Table { .. } => None,
        }
    }

    /// `e_i e_j` in the basis. Group products leaving a window raise `WindowOverflow`.
    pub fn product(&self, i: usize, j: usize) -> Result<Sparse> {
        match &self.kind {
            AlgebraKind::Table { products, .. } => Ok(products[i][j].clone()),
            AlgebraKind::GroupAlgebra { group } => group
                .mul(i, j)
                .map(|k| vec![(k, ONE)])
                .ok_or_else(|| Error::WindowOverflow(format!("{} · {}", group.label(i), group.label(j)))),
            AlgebraKind::Crossed { base, action } => {
                let g = action.group();
                let m = g.order();
                let (a, x) = (i / m, i % m);
                let (b, y) = (j / m, j % m);
                let xy = g.mul(x, y).ok_or_else(|| Error::WindowOverflow(format!("{} · {}", g.label(x), g.label(y))))?;
                let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
                for &(k, c) in action.apply(x, b) {
                    for (l, d) in base.product(a, k)? {
                        *acc.entry(l * m + xy).or_insert(ZERO) += c * d;
                    }
                }
                Ok(acc.into_iter().filter(|(_, c)| *c != ZERO).collect())
            }
        }
    }

    /// Product of two sparse vectors.
    pub fn product_sparse(&self, x: &Sparse, y: &Sparse) -> Result<Sparse> {
        let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
        for &(i, a) in x {
            for &(j, b) in y {
                for (k, c) in self.product(i, j)? {
                    *acc.entry(k).or_insert(ZERO) += a * b * c;
                }
            }
        }
        Ok(acc.into_iter().filter(|(_, c)| *c != ZERO).collect())
    }

    /// The operator of a basis element. Crossed algebras need the crossed triple.
    pub fn represent(&self, i: usize, crossed: Option<&CrossedTriple>) -> Result<ComplexOperator> {
        match &self.kind {
            AlgebraKind::Table { basis, .. } => Ok(basis[i].clone()),
            AlgebraKind::GroupAlgebra { group } => groups::left_translation(group, i),
            AlgebraKind::Crossed { base, action } => {
                let c = crossed.ok_or_else(|| Error::AlgebraMismatch("crossed algebra needs a crossed triple".into()))?;
                if c.group() != action.group() {
                    return Err(Error::AlgebraMismatch("crossed triple uses a different group".into()));
                }
                let m = action.group().order();
                c.rep_term(&base.represent(i / m, None)?, i % m)
            }
        }
    }

    fn same(&self, other: &BasedAlgebra) -> bool {
        std::ptr::eq(self, other) || self.labels == other.labels
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Module {
    /// `M = A` with the usual bimodule structure.
    Plain,
    /// `M = A⊗A^op` with `a(m⊗p)b = amb⊗p`.
    OpPair,
}

impl Module {
    fn lead(self) -> usize {
        match self {
            Module::Plain => 1,
            Module::OpPair => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HochschildChain {
    algebra: Arc<BasedAlgebra>,
    module: Module,
    degree: usize,
    terms: BTreeMap<Vec<usize>, C64>,
}

impl HochschildChain {
    pub fn zero(algebra: &Arc<BasedAlgebra>, module: Module, degree: usize) -> Self {
        Self { algebra: algebra.clone(), module, degree, terms: BTreeMap::new() }
    }

    pub fn algebra(&self) -> &Arc<BasedAlgebra> {
        &self.algebra
    }

    pub fn module(&self) -> Module {
        self.module
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, C64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff · key`. Exact zeros are dropped.
    pub fn add_term(&mut self, key: Vec<usize>, coeff: C64) -> Result<()> {
        if key.len() != self.module.lead() + self.degree {
            return Err(Error::AlgebraMismatch(format!("key of length {} for degree {}", key.len(), self.degree)));
        }
        if let Some(&bad) = key.iter().find(|&&k| k >= self.algebra.dim()) {
            return Err(Error::AlgebraMismatch(format!("index {bad} outside a basis of size {}", self.algebra.dim())));
        }
        if coeff == ZERO {
            return Ok(());
        }
        let e = self.terms.entry(key).or_insert(ZERO);
        *e += coeff;
        if *e == ZERO {
            let k = self.terms.iter().find(|(_, v)| **v == ZERO).map(|(k, _)| k.clone());
            if let Some(k) = k {
                self.terms.remove(&k);
            }
        }
        Ok(())
    }

    /// Adds `coeff · s₀⊗s₁⊗…` with each slot a sparse vector, expanded multilinearly.
    pub fn add_tensor(&mut self, coeff: C64, slots: &[Sparse]) -> Result<()> {
        let mut stack: Vec<(Vec<usize>, C64)> = vec![(Vec::with_capacity(slots.len()), coeff)];
        for slot in slots {
            let mut next = Vec::with_capacity(stack.len() * slot.len());
            for (key, c) in &stack {
                for &(i, d) in slot {
                    let mut k = key.clone();
                    k.push(i);
                    next.push((k, c * d));
                }
            }
            stack = next;
        }
        for (k, c) in stack {
            self.add_term(k, c)?;
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.algebra.same(&other.algebra) || self.module != other.module {
            return Err(Error::AlgebraMismatch("chains live over different algebras or modules".into()));
        }
        if self.degree != other.degree && !self.is_empty() && !other.is_empty() {
            return Err(Error::AlgebraMismatch(format!("degrees {} and {}", self.degree, other.degree)));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = if self.is_empty() { Self { degree: other.degree, ..self.clone() } } else { self.clone() };
        for (k, c) in &other.terms {
            out.add_term(k.clone(), *c)?;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self { terms: BTreeMap::new(), ..self.clone() };
        for (k, c) in &self.terms {
            let v = c * s;
            if v != ZERO {
                out.terms.insert(k.clone(), v);
            }
        }
        out
    }

    /// Largest coefficient modulus; 0 for the zero chain.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient difference to `other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.try_sub(other)?.max_abs())
    }

    /// `c′ = Σ(a₀⊗1)⊗a₁⊗…` from a plain chain.
    pub fn promote(&self) -> Result<Self> {
        if self.module != Module::Plain {
            return Err(Error::AlgebraMismatch("only plain chains are promoted".into()));
        }
        let unit = self.algebra.unit();
        let mut out = Self::zero(&self.algebra, Module::OpPair, self.degree);
        for (k, c) in &self.terms {
            let mut slots = vec![vec![(k[0], ONE)], unit.clone()];
            slots.extend(k[1..].iter().map(|&i| vec![(i, ONE)]));
            out.add_tensor(*c, &slots)?;
        }
        Ok(out)
    }

    /// The plain chain whose promotion this is, when every op-slot is the unit.
    pub fn strip_unit_op(&self) -> Option<Self> {
        if self.module != Module::OpPair {
            return None;
        }
        let unit: HashMap<usize, C64> = self.algebra.unit().into_iter().collect();
        let mut plain: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
        for (k, c) in &self.terms {
            let u = *unit.get(&k[1])?;
            let mut rest = vec![k[0]];
            rest.extend_from_slice(&k[2..]);
            let v = c / u;
            match plain.get(&rest) {
                Some(w) if (w - v).norm() > 1e-12 * w.norm().max(1.0) => return None,
                Some(_) => {}
                None => {
                    plain.insert(rest, v);
                }
            }
        }
        let out = Self { algebra: self.algebra.clone(), module: Module::Plain, degree: self.degree, terms: plain };
        let back = out.promote().ok()?;
        (back.distance(self).ok()? <= 1e-12 * self.max_abs().max(1.0)).then_some(out)
    }

    /// Terms as `{"coeff": [re, im], "indices": [...], "labels": [...]}`.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let labels: Vec<&str> = k.iter().map(|&i| self.algebra.label(i)).collect();
                json!({ "coeff": [c.re, c.im], "indices": k, "labels": labels })
            })
            .collect();
        json!({
            "module": match self.module { Module::Plain => "plain", Module::OpPair => "op_pair" },
            "degree": self.degree,
            "algebra_dim": self.algebra.dim(),
            "terms": terms,
        })
    }
}

pub const BOUNDARY_ANCHOR: &str = "(-1)^n a_n m ⊗ a_1 ⊗ ⋯";

fn left_mult(alg: &BasedAlgebra, module: Module, a: usize, lead: &[usize]) -> Result<Vec<Sparse>> {
    let x = alg.product(a, lead[0])?;
    Ok(match module {
        Module::Plain => vec![x],
        Module::OpPair => vec![x, vec![(lead[1], ONE)]],
    })
}

fn right_mult(alg: &BasedAlgebra, module: Module, lead: &[usize], a: usize) -> Result<Vec<Sparse>> {
    let x = alg.product(lead[0], a)?;
    Ok(match module {
        Module::Plain => vec![x],
        Module::OpPair => vec![x, vec![(lead[1], ONE)]],
    })
}

fn unit_slots(idx: &[usize]) -> Vec<Sparse> {
    idx.iter().map(|&i| vec![(i, ONE)]).collect()
}

/// The Hochschild boundary. Degree 0 maps to the zero chain.
pub fn boundary(c: &HochschildChain) -> Result<HochschildChain> {
    let n = c.degree;
    if n == 0 {
        return Ok(HochschildChain::zero(&c.algebra, c.module, 0));
    }
    let alg = &*c.algebra;
    let lead = c.module.lead();
    let mut out = HochschildChain::zero(&c.algebra, c.module, n - 1);
    for (key, &coeff) in &c.terms {
        let (m, a) = key.split_at(lead);
        let mut slots = right_mult(alg, c.module, m, a[0])?;
        slots.extend(unit_slots(&a[1..]));
        out.add_tensor(coeff, &slots)?;
        for i in 1..n {
            let mut slots = unit_slots(m);
            slots.extend(unit_slots(&a[..i - 1]));
            slots.push(alg.product(a[i - 1], a[i])?);
            slots.extend(unit_slots(&a[i + 1..]));
            let sign = if i % 2 == 0 { ONE } else { -ONE };
            out.add_tensor(coeff * sign, &slots)?;
        }
        let mut slots = left_mult(alg, c.module, a[n - 1], m)?;
        slots.extend(unit_slots(&a[..n - 1]));
        let sign = if n % 2 == 0 { ONE } else { -ONE };
        out.add_tensor(coeff * sign, &slots)?;
    }
    Ok(out)
}

/// `α_g(c)`: the action on the first slot and every tensor slot; op-slots are fixed.
pub fn alpha_on_chain(c: &HochschildChain, g: usize, action: &AlgebraAction) -> Result<HochschildChain> {
    check_action(c, action)?;
    let lead = c.module.lead();
    let mut out = HochschildChain::zero(&c.algebra, c.module, c.degree);
    for (key, &coeff) in &c.terms {
        let slots: Vec<Sparse> = key
            .iter()
            .enumerate()
            .map(|(pos, &i)| if pos == 1 && lead == 2 { vec![(i, ONE)] } else { action.apply(g, i).clone() })
            .collect();
        out.add_tensor(coeff, &slots)?;
    }
    Ok(out)
}

/// `c_g`: the action applied to the op-slot only.
pub fn twist_op_slot(c: &HochschildChain, g: usize, action: &AlgebraAction) -> Result<HochschildChain> {
    check_action(c, action)?;
    if c.module != Module::OpPair {
        return Err(Error::AlgebraMismatch("c_g needs an op-slot".into()));
    }
    let mut out = HochschildChain::zero(&c.algebra, c.module, c.degree);
    for (key, &coeff) in &c.terms {
        let mut slots = unit_slots(key);
        slots[1] = action.apply(g, key[1]).clone();
        out.add_tensor(coeff, &slots)?;
    }
    Ok(out)
}

fn check_action(c: &HochschildChain, action: &AlgebraAction) -> Result<()> {
    if action.coords.first().map_or(0, |r| r.len()) != c.algebra.dim() {
        return Err(Error::AlgebraMismatch("action and chain algebra have different dimensions".into()));
    }
    Ok(())
}

/// `max_g ‖α_g(c) − c‖` with the first element that moves `c`.
pub fn invariance_defect(c: &HochschildChain, action: &AlgebraAction, tol: f64) -> Result<(f64, Option<usize>)> {
    let mut worst = (0.0f64, None);
    for g in action.group().elements_by_length() {
        let r = alpha_on_chain(c, g, action)?.distance(c)?;
        if r > tol && worst.1.is_none() {
            worst.1 = Some(g);
        }
        worst.0 = worst.0.max(r);
    }
    Ok(worst)
}

/// `c⋊_αδ` over the crossed-product algebra. A degree-0 `δ = Σ(δ_g⊗δ_h)`
/// gives the module product `Σ(a₀δ_g⊗b₀δ_h)⊗a₁⊗⋯⊗aₙ`; a degree-1 `δ` gives
/// `Σ_p (−1)^p (a₀δ_g⊗b₀δ_h)⊗α_f(a₁)⊗⋯⊗α_f(a_p)⊗δ_f⊗a_{p+1}⊗⋯⊗aₙ`.
pub fn twisted_shuffle(c: &HochschildChain, delta: &HochschildChain, crossed: &Arc<BasedAlgebra>) -> Result<HochschildChain> {
    let (base, action) =
        crossed.crossed_parts().ok_or_else(|| Error::AlgebraMismatch("target must be a crossed-product algebra".into()))?;
    if !base.same(&c.algebra) {
        return Err(Error::AlgebraMismatch("chain algebra differs from the crossed base".into()));
    }
    let q_group = delta.algebra.group().ok_or_else(|| Error::AlgebraMismatch("δ must be a chain over ℂG".into()))?;
    if !matches!(delta.algebra.kind, AlgebraKind::GroupAlgebra { .. }) || q_group != action.group() {
        return Err(Error::AlgebraMismatch("δ must be a chain over the group algebra of the acting group".into()));
    }
    if c.module != Module::OpPair || delta.module != Module::OpPair {
        return Err(Error::AlgebraMismatch("twisted shuffle takes chains with op-slots".into()));
    }
    if delta.degree > 1 {
        return Err(Error::AlgebraMismatch(format!("δ has degree {}", delta.degree)));
    }
    let n = c.degree;
    let e = q_group.identity();
    let m = q_group.order();
    let lift = |i: usize, g: usize| i * m + g;
    let lift_sparse = |v: &Sparse, g: usize| -> Sparse { v.iter().map(|&(i, c)| (lift(i, g), c)).collect() };
    let unit = base.unit();
    let mut out = HochschildChain::zero(crossed, Module::OpPair, n + delta.degree);
    for (ck, &cc) in &c.terms {
        let (a0, b0, a) = (ck[0], ck[1], &ck[2..]);
        for (dk, &dc) in &delta.terms {
            let (g, h) = (dk[0], dk[1]);
            let lead = vec![vec![(lift(a0, g), ONE)], vec![(lift(b0, h), ONE)]];
            if delta.degree == 0 {
                let mut slots = lead.clone();
                slots.extend(a.iter().map(|&i| vec![(lift(i, e), ONE)]));
                out.add_tensor(cc * dc, &slots)?;
                continue;
            }
            let f = dk[2];
            let delta_f = lift_sparse(&unit, f);
            for p in 0..=n {
                let mut slots = lead.clone();
                slots.extend(a[..p].iter().map(|&i| lift_sparse(action.apply(f, i), e)));
                slots.push(delta_f.clone());
                slots.extend(a[p..].iter().map(|&i| vec![(lift(i, e), ONE)]));
                let sign = if p % 2 == 0 { ONE } else { -ONE };
                out.add_tensor(cc * dc * sign, &slots)?;
            }
        }
    }
    Ok(out)
}

/// `Δ_g = (δ_{g⁻¹}⊗δ_e)⊗δ_g`.
pub fn delta_g(q: &Arc<BasedAlgebra>, g: usize) -> Result<HochschildChain> {
    let group = match &q.kind {
        AlgebraKind::GroupAlgebra { group } => group,
        _ => return Err(Error::AlgebraMismatch("Δ_g lives over a group algebra".into())),
    };
    let mut out = HochschildChain::zero(q, Module::OpPair, 1);
    out.add_term(vec![group.inverse(g), group.identity(), g], ONE)?;
    Ok(out)
}

/// Evaluates chains as operators with cached representations and commutators.
pub struct Evaluator<'a> {
    rep: Box<dyn Fn(usize) -> Result<ComplexOperator> + 'a>,
    dirac: ComplexOperator,
    real: Option<ComplexOperator>,
    reps: HashMap<usize, ComplexOperator>,
    comms: HashMap<usize, ComplexOperator>,
    op_slots: HashMap<usize, ComplexOperator>,
}

impl<'a> Evaluator<'a> {
    pub fn new<F>(rep: F, dirac: &ComplexOperator, real: Option<&ComplexOperator>) -> Self
    where
        F: Fn(usize) -> Result<ComplexOperator> + 'a,
    {
        Self {
            rep: Box::new(rep),
            dirac: dirac.clone(),
            real: real.map(|j| j.clone().with_space(dirac.space().clone()).unwrap_or_else(|_| j.clone())),
            reps: HashMap::new(),
            comms: HashMap::new(),
            op_slots: HashMap::new(),
        }
    }

    /// Representation through `algebra.represent`.
    pub fn for_algebra(
        algebra: &'a BasedAlgebra,
        crossed: Option<&'a CrossedTriple>,
        dirac: &ComplexOperator,
        real: Option<&ComplexOperator>,
    ) -> Self {
        Self::new(move |i| algebra.represent(i, crossed), dirac, real)
    }

    fn rep(&mut self, i: usize) -> Result<ComplexOperator> {
        if let Some(r) = self.reps.get(&i) {
            return Ok(r.clone());
        }
        let r = (self.rep)(i)?.with_space(self.dirac.space().clone())?;
        self.reps.insert(i, r.clone());
        Ok(r)
    }

    fn comm(&mut self, i: usize) -> Result<ComplexOperator> {
        if let Some(r) = self.comms.get(&i) {
            return Ok(r.clone());
        }
        let a = self.rep(i)?;
        let r = commutator(&self.dirac, &a, false)?;
        self.comms.insert(i, r.clone());
        Ok(r)
    }

    /// `J π(p*) J⁻¹`.
    fn op_slot(&mut self, p: usize) -> Result<ComplexOperator> {
        if let Some(r) = self.op_slots.get(&p) {
            return Ok(r.clone());
        }
        let j = self.real.clone().ok_or(Error::MissingJ)?;
        let b = self.rep(p)?.adjoint();
        let r = &(&j * &b) * &j.adjoint();
        self.op_slots.insert(p, r.clone());
        Ok(r)
    }

    /// `π_D(c)`: `Σ π(a₀)[D,π(a₁)]⋯` for plain chains and
    /// `Σ π(a₀)Jπ(b₀*)J⁻¹[D,π(a₁)]⋯` for chains with op-slots.
    pub fn pi_d(&mut self, c: &HochschildChain) -> Result<ComplexOperator> {
        let lead = c.module.lead();
        let mut out = ComplexOperator::zero(self.dirac.dim())?.with_space(self.dirac.space().clone())?;
        for (key, &coeff) in &c.terms {
            let mut term = self.rep(key[0])?;
            if lead == 2 {
                term = &term * &self.op_slot(key[1])?;
            }
            for &a in &key[lead..] {
                term = &term * &self.comm(a)?;
            }
            out = &out + &term.scale(coeff);
        }
        Ok(out)
    }

    /// `op` moved onto the space of the Dirac operator.
    pub fn rebase(&self, op: &ComplexOperator) -> Result<ComplexOperator> {
        op.clone().with_space(self.dirac.space().clone())
    }
}

pub const ORIENTATION_ANCHOR: &str = "admits an orientation cycle ĉ";
pub const LEIBNIZ_ANCHOR: &str = "b(c⋊_αδ) = bc⋊_αδ + c⋊bδ";

/// `M = −i·l(g)(n+1)` over an odd base and `l(g)(n+1)` over an even one.
pub fn normalisation(l_g: f64, degree: usize, base_even: bool) -> C64 {
    let k = l_g * (degree as f64 + 1.0);
    if base_even {
        C64::new(k, 0.0)
    } else {
        C64::new(0.0, -k)
    }
}

/// Base data needed to verify the input cycle.
pub struct BaseOrientation<'e, 'a> {
    pub evaluator: &'e mut Evaluator<'a>,
    /// `χ`, or the identity for an odd base.
    pub chi: &'e ComplexOperator,
    pub even: bool,
    pub window: &'e ComplexOperator,
    pub tolerance: f64,
}

/// `ĉ = (1/M) c⋊_αΔ_g` after checking `l(g) ≠ 0`, G-invariance of `c`, and `π_D(c) = χ`.
pub fn build_orientation(
    c: &HochschildChain,
    crossed: &Arc<BasedAlgebra>,
    q: &Arc<BasedAlgebra>,
    weight: &Weight,
    g: usize,
    base: BaseOrientation<'_, '_>,
) -> Result<HochschildChain> {
    let (_, action) = crossed.crossed_parts().ok_or_else(|| Error::AlgebraMismatch("target must be a crossed product".into()))?;
    let group = action.group();
    let l_g = weight.value(g);
    if l_g.abs() <= 1e-12 {
        return Err(Error::ZeroWeightElement(group.label(g)));
    }
    let weak = match c.module {
        Module::Plain => c.promote()?,
        Module::OpPair => c.clone(),
    };
    let (r, witness) = invariance_defect(&weak, action, base.tolerance)?;
    if let Some(h) = witness {
        return Err(Error::NotGInvariant { g: group.label(h), residual: r });
    }
    let pi = base.evaluator.pi_d(c)?;
    let chi = base.evaluator.rebase(base.chi)?;
    let window = base.evaluator.rebase(base.window)?;
    let res = relation_residual(&pi, &chi, Some(&window))?;
    if res > base.tolerance {
        return Err(Error::NotOrientation(format!("π_D(c) − χ has residual {res:e}")));
    }
    let m = normalisation(l_g, c.degree, base.even);
    Ok(twisted_shuffle(&weak, &delta_g(q, g)?, crossed)?.scale(ONE / m))
}

/// Group product of the group parts of all non-op slots, or `None` if it leaves the window.
fn slot_charge(alg: &BasedAlgebra, key: &[usize], lead: usize) -> Option<usize> {
    let g = alg.group()?;
    let parts = key.iter().enumerate().filter(|(pos, _)| !(lead == 2 && *pos == 1)).map(|(_, &k)| alg.split(k).map(|s| s.1));
    if let Some(n) = g.window() {
        let mut total = 0i64;
        for p in parts {
            total += g.integer(p?)?;
        }
        let _ = n;
        g.from_integer(total)
    } else {
        let mut acc = g.identity();
        for p in parts {
            acc = g.mul(acc, p?)?;
        }
        Some(acc)
    }
}

/// Total modulus of terms whose group parts do not multiply to `e`.
pub fn dual_coaction_defect(c: &HochschildChain) -> Result<f64> {
    let g = c.algebra.group().ok_or_else(|| Error::AlgebraMismatch("dual coaction needs a crossed product".into()))?;
    let lead = c.module.lead();
    Ok(c.terms.iter().filter(|(k, _)| slot_charge(&c.algebra, k, lead) != Some(g.identity())).map(|(_, v)| v.norm()).sum())
}

/// `max |coeff·(Π conj χ(g_slot) − 1)|` over terms.
pub fn dual_action_defect(c: &HochschildChain, chi: &Character) -> Result<f64> {
    let lead = c.module.lead();
    let mut worst = 0.0f64;
    for (k, v) in &c.terms {
        let mut phase = ONE;
        for (pos, &i) in k.iter().enumerate() {
            if lead == 2 && pos == 1 {
                continue;
            }
            let (_, g) = c.algebra.split(i).ok_or_else(|| Error::AlgebraMismatch("dual action needs a crossed product".into()))?;
            phase *= chi.value(g).conj();
        }
        worst = worst.max((v * (phase - ONE)).norm());
    }
    Ok(worst)
}

/// Residuals of `b(ĉ) = 0` and `π_D̂(ĉ) = χ̂`, strongness, and dual invariance.
pub fn check_orientation(
    chat: &HochschildChain,
    evaluator: &mut Evaluator<'_>,
    chi_hat: &ComplexOperator,
    window: &ComplexOperator,
    characters: &[Character],
    tolerance: f64,
) -> Result<Vec<CheckRecord>> {
    let b = boundary(chat)?;
    let mut out = vec![
        CheckRecord::residual("orientation.cycle", ORIENTATION_ANCHOR, b.max_abs(), tolerance)
            .with_detail(format!("{} terms in ĉ", chat.len())),
    ];
    let pi = evaluator.pi_d(chat)?;
    let res = relation_residual(&pi, &evaluator.rebase(chi_hat)?, Some(&evaluator.rebase(window)?))?;
    out.push(CheckRecord::residual("orientation.pi_d", ORIENTATION_ANCHOR, res, tolerance));
    out.push(
        CheckRecord::flag("orientation.strong", "ĉ is also a strong orientation cycle", chat.strip_unit_op().is_some())
            .report_only(),
    );
    let group = chat.algebra.group();
    if group.is_some_and(|g| g.is_finite()) {
        out.push(CheckRecord::residual("orientation.dual_coaction", "is invariant for the dual coaction", dual_coaction_defect(chat)?, tolerance));
    }
    if !characters.is_empty() {
        let worst = characters.iter().map(|chi| dual_action_defect(chat, chi)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        out.push(CheckRecord::residual("orientation.dual_action", "invariant under the dual action", worst, tolerance));
    }
    Ok(out)
}

/// Random chain with Gaussian-integer coefficients in `[-range, range]²`.
pub fn random_chain<R: Rng>(
    algebra: &Arc<BasedAlgebra>,
    module: Module,
    degree: usize,
    terms: usize,
    range: i32,
    rng: &mut R,
) -> Result<HochschildChain> {
    random_chain_from(algebra, module, degree, terms, range, rng, |rng| rng.gen_range(0..algebra.dim()))
}

/// Random chain whose indices come from `pick`.
pub fn random_chain_from<R: Rng, F: FnMut(&mut R) -> usize>(
    algebra: &Arc<BasedAlgebra>,
    module: Module,
    degree: usize,
    terms: usize,
    range: i32,
    rng: &mut R,
    mut pick: F,
) -> Result<HochschildChain> {
    let mut c = HochschildChain::zero(algebra, module, degree);
    for _ in 0..terms {
        let key: Vec<usize> = (0..module.lead() + degree).map(|_| pick(rng)).collect();
        let coeff = C64::new(rng.gen_range(-range..=range) as f64, rng.gen_range(-range..=range) as f64);
        c.add_term(key, coeff)?;
    }
    Ok(c)
}

/// `(1/|G|) Σ_g α_g(c)` for a finite group.
pub fn reynolds(c: &HochschildChain, action: &AlgebraAction) -> Result<HochschildChain> {
    let g = action.group();
    if !g.is_finite() {
        return Err(Error::GroupNotFinite);
    }
    let mut out = HochschildChain::zero(&c.algebra, c.module, c.degree);
    for h in 0..g.order() {
        out = out.try_add(&alpha_on_chain(c, h, action)?)?;
    }
    Ok(out.scale(C64::new(1.0 / g.order() as f64, 0.0)))
}

/// Random chain over the group algebra of a windowed `ℤ` whose slot integers
/// (op-slot excluded) sum to zero, with `|k| <= reach` per tensor slot.
pub fn zero_charge_chain<R: Rng>(
    algebra: &Arc<BasedAlgebra>,
    module: Module,
    degree: usize,
    terms: usize,
    reach: i64,
    rng: &mut R,
) -> Result<HochschildChain> {
    let group = match &algebra.kind {
        AlgebraKind::GroupAlgebra { group } if group.window().is_some() => group.clone(),
        _ => return Err(Error::NotWindowed),
    };
    let idx = |k: i64| group.from_integer(k).ok_or_else(|| Error::WindowOverflow(k.to_string()));
    let mut c = HochschildChain::zero(algebra, module, degree);
    for _ in 0..terms {
        let ks: Vec<i64> = (0..degree).map(|_| rng.gen_range(-reach..=reach)).collect();
        let mut key = vec![idx(-ks.iter().sum::<i64>())?];
        if module == Module::OpPair {
            key.push(idx(rng.gen_range(-reach..=reach))?);
        }
        for k in ks {
            key.push(idx(k)?);
        }
        let coeff = C64::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64);
        c.add_term(key, coeff)?;
    }
    Ok(c)
}

/// `b(c⋊δ) − (bc⋊δ + c⋊bδ)`, the boundary rule with the sign as usually stated.
pub fn leibniz_defect(c: &HochschildChain, delta: &HochschildChain, crossed: &Arc<BasedAlgebra>) -> Result<HochschildChain> {
    let (lhs, bc, bd) = leibniz_parts(c, delta, crossed)?;
    lhs.try_sub(&bc.try_add(&bd)?)
}

/// `b(c⋊δ) − (c⋊bδ − bc⋊δ)`. Because `c⋊δ` is `(−1)^n` times the untwisted
/// shuffle when the action is trivial, the graded rule carries this sign.
/// It holds exactly for G-invariant `c` and `δ` supported on `(δ_g⊗δ_h)⊗δ_f` with `gf = e`.
pub fn graded_leibniz_defect(c: &HochschildChain, delta: &HochschildChain, crossed: &Arc<BasedAlgebra>) -> Result<HochschildChain> {
    let (lhs, bc, bd) = leibniz_parts(c, delta, crossed)?;
    lhs.try_sub(&bd.try_sub(&bc)?)
}

fn leibniz_parts(
    c: &HochschildChain,
    delta: &HochschildChain,
    crossed: &Arc<BasedAlgebra>,
) -> Result<(HochschildChain, HochschildChain, HochschildChain)> {
    let lhs = boundary(&twisted_shuffle(c, delta, crossed)?)?;
    let bc = if c.degree == 0 {
        HochschildChain::zero(crossed, Module::OpPair, 0)
    } else {
        twisted_shuffle(&boundary(c)?, delta, crossed)?
    };
    let bd = twisted_shuffle(c, &boundary(delta)?, crossed)?;
    Ok((lhs, bc, bd))
}

/// Random degree-one chain over `ℂG` on terms `(δ_{f⁻¹}⊗δ_h)⊗δ_f` with `f, h` in `pool`.
pub fn random_balanced_delta<R: Rng>(q: &Arc<BasedAlgebra>, pool: &[usize], terms: usize, rng: &mut R) -> Result<HochschildChain> {
    let group = match &q.kind {
        AlgebraKind::GroupAlgebra { group } => group,
        _ => return Err(Error::AlgebraMismatch("δ lives over a group algebra".into())),
    };
    if pool.is_empty() {
        return Err(Error::AlgebraMismatch("empty element pool".into()));
    }
    let mut out = HochschildChain::zero(q, Module::OpPair, 1);
    for _ in 0..terms {
        let f = pool[rng.gen_range(0..pool.len())];
        let h = pool[rng.gen_range(0..pool.len())];
        let coeff = C64::new(rng.gen_range(-2..=2) as f64, rng.gen_range(-2..=2) as f64);
        out.add_term(vec![group.inverse(f), h, f], coeff)?;
    }
    Ok(out)
}
