//! Group models, weights and the operators of the left regular representation.
//!
//! Elements are plain indices. For a windowed integer group `WindowedZ(N)`
//! index `i` stands for the integer `i - N`; products that leave `[-N, N]`
//! are reported as `None` and never wrapped around.

use std::fmt;

use crate::error::{Error, Result};
use crate::opalg::{ComplexOperator, C64, ONE};

/// Largest half-width accepted for a windowed integer group.
pub const WINDOW_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum GroupKind {
    Finite { table: Vec<Vec<usize>>, inverse: Vec<usize>, identity: usize },
    WindowedZ { n: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupModel {
    kind: GroupKind,
    abelian: bool,
}

impl GroupModel {
    /// Validates the table exhaustively: closure, identity, inverses, associativity.
    pub fn finite(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroupTable("empty table".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGroupTable(format!("row {i} has length {}", row.len())));
            }
            if let Some(bad) = row.iter().find(|&&x| x >= n) {
                return Err(Error::InvalidGroupTable(format!("entry {bad} out of range in row {i}")));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| Error::InvalidGroupTable("no identity element".into()))?;
        let mut inverse = Vec::with_capacity(n);
        for x in 0..n {
            let inv = (0..n)
                .find(|&y| table[x][y] == identity && table[y][x] == identity)
                .ok_or_else(|| Error::InvalidGroupTable(format!("element {x} has no inverse")))?;
            inverse.push(inv);
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidGroupTable(format!("associativity fails at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let abelian = (0..n).all(|a| (0..n).all(|b| table[a][b] == table[b][a]));
        Ok(Self { kind: GroupKind::Finite { table, inverse, identity }, abelian })
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGroupTable("cyclic group of order 0".into()));
        }
        Self::finite((0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect())
    }

    /// Permutations of three letters; index 0 is the identity.
    pub fn symmetric3() -> Self {
        let perms: [[usize; 3]; 6] = [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("closed");
        let table = perms
            .iter()
            .map(|a| perms.iter().map(|b| index([a[b[0]], a[b[1]], a[b[2]]])).collect())
            .collect();
        Self::finite(table).expect("valid table")
    }

    pub fn windowed_z(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::EmptyWindow);
        }
        if n > WINDOW_CAP {
            return Err(Error::WindowTooLarge { n, cap: WINDOW_CAP });
        }
        Ok(Self { kind: GroupKind::WindowedZ { n }, abelian: true })
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn order(&self) -> usize {
        match &self.kind {
            GroupKind::Finite { table, .. } => table.len(),
            GroupKind::WindowedZ { n } => 2 * n + 1,
        }
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, GroupKind::Finite { .. })
    }

    /// Half-width `N` of a windowed group.
    pub fn window(&self) -> Option<usize> {
        match self.kind {
            GroupKind::WindowedZ { n } => Some(n),
            GroupKind::Finite { .. } => None,
        }
    }

    pub fn identity(&self) -> usize {
        match &self.kind {
            GroupKind::Finite { identity, .. } => *identity,
            GroupKind::WindowedZ { n } => *n,
        }
    }

    pub fn inverse(&self, g: usize) -> usize {
        match &self.kind {
            GroupKind::Finite { inverse, .. } => inverse[g],
            GroupKind::WindowedZ { n } => 2 * n - g,
        }
    }

    /// Product `gh`, or `None` when it leaves the window.
    pub fn mul(&self, g: usize, h: usize) -> Option<usize> {
        match &self.kind {
            GroupKind::Finite { table, .. } => Some(table[g][h]),
            GroupKind::WindowedZ { .. } => self.from_integer(self.integer(g)? + self.integer(h)?),
        }
    }

    /// Integer value of a windowed element.
    pub fn integer(&self, g: usize) -> Option<i64> {
        self.window().map(|n| g as i64 - n as i64)
    }

    pub fn from_integer(&self, k: i64) -> Option<usize> {
        let n = self.window()? as i64;
        (k.abs() <= n).then(|| (k + n) as usize)
    }

    /// `|k|` on windowed groups; 0 for the identity and 1 otherwise on finite ones.
    pub fn word_length(&self, g: usize) -> usize {
        match self.integer(g) {
            Some(k) => k.unsigned_abs() as usize,
            None => usize::from(g != self.identity()),
        }
    }

    /// Elements in order of word length: `0, 1, -1, 2, -2, ...` on windowed groups.
    pub fn elements_by_length(&self) -> Vec<usize> {
        match self.window() {
            Some(n) => {
                let mut out = vec![self.identity()];
                for k in 1..=n as i64 {
                    out.push(self.from_integer(k).expect("in window"));
                    out.push(self.from_integer(-k).expect("in window"));
                }
                out
            }
            None => {
                let e = self.identity();
                std::iter::once(e).chain((0..self.order()).filter(|&g| g != e)).collect()
            }
        }
    }

    /// Elements with word length at most `radius`.
    pub fn ball(&self, radius: usize) -> Vec<usize> {
        self.elements_by_length().into_iter().filter(|&g| self.word_length(g) <= radius).collect()
    }

    pub fn label(&self, g: usize) -> String {
        match self.integer(g) {
            Some(k) => k.to_string(),
            None if g == self.identity() => "e".into(),
            None => format!("g{g}"),
        }
    }

    /// Inverse of [`GroupModel::label`]; finite groups also accept a bare index.
    pub fn parse_element(&self, s: &str) -> Result<usize> {
        let s = s.trim();
        let bad = || Error::UnknownElement(s.to_string());
        match self.window() {
            Some(_) => {
                let k: i64 = s.parse().map_err(|_| bad())?;
                self.from_integer(k).ok_or_else(bad)
            }
            None => {
                if s == "e" {
                    return Ok(self.identity());
                }
                let idx: usize = s.trim_start_matches('g').parse().map_err(|_| bad())?;
                (idx < self.order()).then_some(idx).ok_or_else(bad)
            }
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.order()).map(|g| self.label(g)).collect()
    }

    /// Projection onto `span{δ_k : |k| <= N - margin}`; identity for finite groups.
    pub fn interior_projection(&self, margin: usize) -> Result<ComplexOperator> {
        interior_projection(self, margin)
    }
}

pub fn interior_projection(g: &GroupModel, margin: usize) -> Result<ComplexOperator> {
    match g.window() {
        None => ComplexOperator::identity(g.order()),
        Some(n) => {
            if margin > n {
                return Err(Error::MarginTooLarge { margin, n });
            }
            let keep = (n - margin) as i64;
            let diag: Vec<f64> = (0..g.order())
                .map(|i| if g.integer(i).expect("windowed").abs() <= keep { 1.0 } else { 0.0 })
                .collect();
            ComplexOperator::real_diagonal(&diag)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    group: GroupModel,
    values: Vec<f64>,
}

impl Weight {
    pub fn from_values(group: &GroupModel, values: Vec<f64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::InvalidWeight(format!(
                "{} values for a group of order {}",
                values.len(),
                group.order()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidWeight(format!("value at {} is not finite", group.label(i))));
        }
        Ok(Self { group: group.clone(), values })
    }

    /// `l(k) = k` on a windowed group.
    pub fn inclusion(group: &GroupModel) -> Result<Self> {
        group.window().ok_or(Error::NotWindowed)?;
        let v = (0..group.order()).map(|g| group.integer(g).expect("windowed") as f64).collect();
        Self::from_values(group, v)
    }

    /// `l(k) = |k|` on a windowed group.
    pub fn absolute(group: &GroupModel) -> Result<Self> {
        group.window().ok_or(Error::NotWindowed)?;
        let v = (0..group.order()).map(|g| group.integer(g).expect("windowed").abs() as f64).collect();
        Self::from_values(group, v)
    }

    pub fn constant(group: &GroupModel, c: f64) -> Result<Self> {
        Self::from_values(group, vec![c; group.order()])
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, g: usize) -> f64 {
        self.values[g]
    }

    /// Left translation function `l_g(x) = l(x) - l(g⁻¹x)`, `None` where `g⁻¹x` leaves the window.
    pub fn translation(&self, g: usize, x: usize) -> Option<f64> {
        let gx = self.group.mul(self.group.inverse(g), x)?;
        Some(self.values[x] - self.values[gx])
    }

    fn scale(&self) -> f64 {
        self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }
}

/// A concrete violation of a weight property.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Element(String),
    Pair(String, String),
    Triple(String, String, String),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Element(g) => write!(f, "g={g}"),
            Witness::Pair(a, b) => write!(f, "({a}, {b})"),
            Witness::Triple(a, b, c) => write!(f, "(x,y,z)=({a}, {b}, {c})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flag {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl Flag {
    fn from_search(witness: Option<Witness>) -> Self {
        Self { holds: witness.is_none(), witness }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightClassification {
    pub non_degenerate: Flag,
    pub dirac: Flag,
    pub first_order: Flag,
    pub homomorphism: Flag,
    pub constant: Flag,
    pub length_function: Flag,
    pub symmetric: Flag,
    pub antisymmetric: Flag,
}

/// Exhaustive classification over the (windowed) domain. Windowed conditions
/// only look at tuples whose products stay inside the window.
///
/// `dirac` asks for bounded translation functions, which has no content on a
/// finite set; the finite-scale stand-in used here is the bound
/// `|l_g(x)| <= max(|l(g)|, |l(g⁻¹)|) + |l(e)|` for all `g, x`, which every
/// length function and every constant-plus-homomorphism satisfies.
pub fn classify_weight(w: &Weight) -> Result<WeightClassification> {
    let g = &w.group;
    if let Some(n) = g.window() {
        if n < 1 {
            return Err(Error::EmptyWindow);
        }
    }
    let tol = 1e-12 * w.scale();
    let l = |x: usize| w.values[x];
    let lab = |x: usize| g.label(x);
    let els = g.elements_by_length();
    let e = g.identity();

    let constant = els.iter().find(|&&x| (l(x) - l(e)).abs() > tol).map(|&x| Witness::Element(lab(x)));

    let non_degenerate = if l(e).abs() > tol {
        Some(Witness::Element(lab(e)))
    } else {
        els.iter().find(|&&x| x != e && l(x).abs() <= tol).map(|&x| Witness::Element(lab(x)))
    };

    let mut homomorphism = None;
    let mut subadditive = None;
    'hom: for &a in &els {
        for &b in &els {
            if let Some(ab) = g.mul(a, b) {
                if homomorphism.is_none() && (l(ab) - l(a) - l(b)).abs() > tol {
                    homomorphism = Some(Witness::Pair(lab(a), lab(b)));
                }
                if subadditive.is_none() && l(ab) > l(a) + l(b) + tol {
                    subadditive = Some(Witness::Pair(lab(a), lab(b)));
                }
                if homomorphism.is_some() && subadditive.is_some() {
                    break 'hom;
                }
            }
        }
    }

    let symmetric = els.iter().find(|&&x| (l(g.inverse(x)) - l(x)).abs() > tol).map(|&x| Witness::Element(lab(x)));
    let antisymmetric =
        els.iter().find(|&&x| (l(g.inverse(x)) + l(x)).abs() > tol).map(|&x| Witness::Element(lab(x)));

    let mut first_order = None;
    'fo: for &x in &els {
        for &y in &els {
            let yi = g.inverse(y);
            for &z in &els {
                let (Some(xz), Some(zy)) = (g.mul(x, z), g.mul(z, yi)) else { continue };
                let Some(xzy) = g.mul(xz, yi) else { continue };
                if ((l(xzy) - l(zy)) - (l(xz) - l(z))).abs() > tol {
                    first_order = Some(Witness::Triple(lab(x), lab(y), lab(z)));
                    break 'fo;
                }
            }
        }
    }

    let mut dirac = None;
    'dirac: for &h in &els {
        let bound = l(h).abs().max(l(g.inverse(h)).abs()) + l(e).abs() + tol;
        for &x in &els {
            if let Some(t) = w.translation(h, x) {
                if t.abs() > bound {
                    dirac = Some(Witness::Pair(lab(h), lab(x)));
                    break 'dirac;
                }
            }
        }
    }

    let length_function = if l(e).abs() > tol {
        Some(Witness::Element(lab(e)))
    } else {
        symmetric.clone().or_else(|| subadditive.clone())
    };

    Ok(WeightClassification {
        non_degenerate: Flag::from_search(non_degenerate),
        dirac: Flag::from_search(dirac),
        first_order: Flag::from_search(first_order),
        homomorphism: Flag::from_search(homomorphism),
        constant: Flag::from_search(constant),
        length_function: Flag::from_search(length_function),
        symmetric: Flag::from_search(symmetric),
        antisymmetric: Flag::from_search(antisymmetric),
    })
}

#[derive(Clone, Debug)]
pub struct GroupOperators {
    /// `λ_g`, indexed by element.
    pub lambda: Vec<ComplexOperator>,
    /// Multiplication by the weight.
    pub m_l: ComplexOperator,
    /// Antilinear `δ_g -> δ_{g⁻¹}`.
    pub j_g: ComplexOperator,
}

pub fn left_translation(g: &GroupModel, h: usize) -> Result<ComplexOperator> {
    ComplexOperator::partial_permutation(g.order(), |x| g.mul(h, x), false)
}

pub fn inversion(g: &GroupModel) -> Result<ComplexOperator> {
    ComplexOperator::partial_permutation(g.order(), |x| Some(g.inverse(x)), true)
}

pub fn multiplication(w: &Weight) -> Result<ComplexOperator> {
    ComplexOperator::real_diagonal(w.values())
}

/// `M_{l_g}`, zero where `g⁻¹x` leaves the window.
pub fn translation_multiplication(w: &Weight, g: usize) -> Result<ComplexOperator> {
    let v: Vec<f64> = (0..w.group.order()).map(|x| w.translation(g, x).unwrap_or(0.0)).collect();
    ComplexOperator::real_diagonal(&v)
}

pub fn build_group_operators(g: &GroupModel, w: &Weight) -> Result<GroupOperators> {
    if w.group() != g {
        return Err(Error::InvalidWeight("weight belongs to a different group".into()));
    }
    let lambda = (0..g.order()).map(|h| left_translation(g, h)).collect::<Result<_>>()?;
    Ok(GroupOperators { lambda, m_l: multiplication(w)?, j_g: inversion(g)? })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarConvention {
    /// `δ_g* = δ_{g⁻¹}`.
    InverseStar,
    /// `δ_g* = δ_g`; only a *-structure for abelian groups.
    IdentityStar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupHopfData {
    group: GroupModel,
    star: StarConvention,
}

impl GroupHopfData {
    pub fn new(group: &GroupModel, star: StarConvention) -> Result<Self> {
        if star == StarConvention::IdentityStar && !group.is_abelian() {
            return Err(Error::StarRequiresAbelian);
        }
        Ok(Self { group: group.clone(), star })
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn star(&self) -> StarConvention {
        self.star
    }
}

/// A unitary character of an abelian group, stored as its value table.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    values: Vec<C64>,
}

impl Character {
    /// `χ(k) = e^{iφk}` on a windowed group.
    pub fn windowed_phase(group: &GroupModel, phi: f64) -> Result<Self> {
        group.window().ok_or(Error::NotWindowed)?;
        let values = (0..group.order())
            .map(|g| C64::from_polar(1.0, phi * group.integer(g).expect("windowed") as f64))
            .collect();
        Ok(Self { values })
    }

    pub fn trivial(group: &GroupModel) -> Self {
        Self { values: vec![ONE; group.order()] }
    }

    /// Checks unimodularity and multiplicativity on all defined products.
    pub fn from_values(group: &GroupModel, values: Vec<C64>) -> Result<Self> {
        if !group.is_abelian() {
            return Err(Error::GroupNotAbelian);
        }
        if values.len() != group.order() {
            return Err(Error::InvalidCharacter(format!("{} values for order {}", values.len(), group.order())));
        }
        for (g, v) in values.iter().enumerate() {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidCharacter(format!("|χ({})| != 1", group.label(g))));
            }
        }
        for a in 0..group.order() {
            for b in 0..group.order() {
                if let Some(ab) = group.mul(a, b) {
                    if (values[ab] - values[a] * values[b]).norm() > 1e-12 {
                        return Err(Error::InvalidCharacter(format!(
                            "not multiplicative at ({}, {})",
                            group.label(a),
                            group.label(b)
                        )));
                    }
                }
            }
        }
        Ok(Self { values })
    }

    pub fn value(&self, g: usize) -> C64 {
        self.values[g]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::relation_residual;

    #[test]
    fn finite_table_validation() {
        assert!(GroupModel::finite(vec![vec![0, 1], vec![1, 1]]).is_err());
        assert!(GroupModel::finite(vec![vec![0, 2], vec![1, 0]]).is_err());
        let s3 = GroupModel::symmetric3();
        assert!(!s3.is_abelian());
        assert_eq!(s3.order(), 6);
        assert!(GroupModel::cyclic(4).unwrap().is_abelian());
    }

    #[test]
    fn window_bounds() {
        assert_eq!(GroupModel::windowed_z(0).unwrap_err(), Error::EmptyWindow);
        assert!(matches!(GroupModel::windowed_z(65), Err(Error::WindowTooLarge { .. })));
        let z = GroupModel::windowed_z(2).unwrap();
        let one = z.from_integer(1).unwrap();
        let two = z.from_integer(2).unwrap();
        assert_eq!(z.mul(one, two), None);
        assert_eq!(z.mul(one, one), Some(two));
        assert_eq!(z.integer(z.inverse(one)), Some(-1));
    }

    #[test]
    fn inclusion_weight_classification() {
        let z = GroupModel::windowed_z(8).unwrap();
        let c = classify_weight(&Weight::inclusion(&z).unwrap()).unwrap();
        assert!(c.homomorphism.holds && c.first_order.holds && c.non_degenerate.holds && c.antisymmetric.holds);
        assert!(c.dirac.holds);
        assert!(!c.constant.holds && !c.symmetric.holds && !c.length_function.holds);
    }

    #[test]
    fn absolute_weight_fails_first_order_with_witness() {
        let z = GroupModel::windowed_z(8).unwrap();
        let c = classify_weight(&Weight::absolute(&z).unwrap()).unwrap();
        assert!(c.length_function.holds && c.dirac.holds && c.symmetric.holds);
        assert!(!c.first_order.holds);
        // x = 1, y = 1, z = 0: l(0) - l(-1) = -1 while l(1) - l(0) = 1.
        assert_eq!(c.first_order.witness, Some(Witness::Triple("1".into(), "1".into(), "0".into())));
    }

    #[test]
    fn zero_weight_is_constant_homomorphism() {
        for g in [GroupModel::cyclic(3).unwrap(), GroupModel::windowed_z(4).unwrap(), GroupModel::symmetric3()] {
            let c = classify_weight(&Weight::constant(&g, 0.0).unwrap()).unwrap();
            assert!(c.constant.holds && c.homomorphism.holds);
            assert!(!c.non_degenerate.holds);
        }
    }

    #[test]
    fn z2_operators() {
        let z2 = GroupModel::cyclic(2).unwrap();
        let w = Weight::from_values(&z2, vec![0.0, 1.0]).unwrap();
        let ops = build_group_operators(&z2, &w).unwrap();
        assert_eq!(relation_residual(&ops.lambda[1], &ComplexOperator::sigma1(), None).unwrap(), 0.0);
        assert_eq!(relation_residual(&ops.m_l, &ComplexOperator::real_diagonal(&[0.0, 1.0]).unwrap(), None).unwrap(), 0.0);
        assert_eq!(relation_residual(&ops.j_g, &ComplexOperator::conjugation(2).unwrap(), None).unwrap(), 0.0);
    }

    #[test]
    fn windowed_operators_small() {
        let z = GroupModel::windowed_z(2).unwrap();
        let ops = build_group_operators(&z, &Weight::inclusion(&z).unwrap()).unwrap();
        let m = ComplexOperator::real_diagonal(&[-2.0, -1.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(relation_residual(&ops.m_l, &m, None).unwrap(), 0.0);
        let shift = ComplexOperator::from_triplets(5, (0..4).map(|i| (i + 1, i, ONE)), false).unwrap();
        assert_eq!(relation_residual(&ops.lambda[z.from_integer(1).unwrap()], &shift, None).unwrap(), 0.0);
    }

    #[test]
    fn inversion_squares_to_identity() {
        for g in [GroupModel::symmetric3(), GroupModel::windowed_z(5).unwrap()] {
            let j = inversion(&g).unwrap();
            assert_eq!(relation_residual(&(&j * &j), &ComplexOperator::identity(g.order()).unwrap(), None).unwrap(), 0.0);
        }
    }

    #[test]
    fn interior_projection_ranks() {
        let rank = |p: &ComplexOperator| p.matrix().nnz();
        assert_eq!(rank(&interior_projection(&GroupModel::windowed_z(8).unwrap(), 2).unwrap()), 13);
        let p = interior_projection(&GroupModel::windowed_z(3).unwrap(), 3).unwrap();
        assert_eq!(rank(&p), 1);
        assert_eq!(p.get(3, 3), ONE);
        assert!(matches!(
            interior_projection(&GroupModel::windowed_z(3).unwrap(), 4),
            Err(Error::MarginTooLarge { .. })
        ));
        let f = interior_projection(&GroupModel::cyclic(3).unwrap(), 10).unwrap();
        assert_eq!(rank(&f), 3);
    }

    #[test]
    fn shift_agrees_with_itself_on_interior() {
        let z = GroupModel::windowed_z(4).unwrap();
        let s = left_translation(&z, z.from_integer(1).unwrap()).unwrap();
        let s2 = left_translation(&z, z.from_integer(2).unwrap()).unwrap();
        let p = interior_projection(&z, 2).unwrap();
        assert!(relation_residual(&(&s * &s), &s2, None).unwrap() == 0.0);
        let sm = left_translation(&z, z.from_integer(-1).unwrap()).unwrap();
        let id = ComplexOperator::identity(z.order()).unwrap();
        assert_eq!(relation_residual(&(&s * &sm), &id, None).unwrap(), 1.0);
        assert_eq!(relation_residual(&(&s * &sm), &id, Some(&p)).unwrap(), 0.0);
    }

    #[test]
    fn identity_star_needs_abelian() {
        assert_eq!(
            GroupHopfData::new(&GroupModel::symmetric3(), StarConvention::IdentityStar).unwrap_err(),
            Error::StarRequiresAbelian
        );
        assert!(GroupHopfData::new(&GroupModel::symmetric3(), StarConvention::InverseStar).is_ok());
    }

    #[test]
    fn characters() {
        let z3 = GroupModel::cyclic(3).unwrap();
        let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!(Character::from_values(&z3, vec![ONE, w, w * w]).is_ok());
        assert!(Character::from_values(&z3, vec![ONE, w, w]).is_err());
        let z = GroupModel::windowed_z(3).unwrap();
        let chi = Character::windowed_phase(&z, 0.5).unwrap();
        assert!(Character::from_values(&z, chi.values().to_vec()).is_ok());
    }

    #[test]
    fn parse_labels_round_trip() {
        let z = GroupModel::windowed_z(3).unwrap();
        for g in 0..z.order() {
            assert_eq!(z.parse_element(&z.label(g)).unwrap(), g);
        }
        let s3 = GroupModel::symmetric3();
        for g in 0..6 {
            assert_eq!(s3.parse_element(&s3.label(g)).unwrap(), g);
        }
        assert!(z.parse_element("7").is_err());
    }
}
