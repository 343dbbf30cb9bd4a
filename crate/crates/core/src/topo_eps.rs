//! Topological ε-algorithms over elements of `E`.
//!
//! [`TopoEpsTable`] implements the simplified algorithms STEA1 and STEA2.
//! Only even-column elements are stored; the coefficients come from a
//! scalar ε-table run on `s_n = ⟨y, S_n⟩`. [`TeaTable`] implements the
//! original TEA1/TEA2 rhombus rules with dual elements in the odd columns
//! and serves as a reference.
//!
//! Outputs are reported as `(k, n, element)` for `ε_{2k}^{(n)}`, i.e. `k`
//! is the half column index.
//!
//! # Storage
//!
//! Both tables traverse the array by ascending diagonals and count the
//! elements they own after every step. For target column `2k` the peaks
//! are
//!
//! | table | stored | auxiliaries |
//! |-------|--------|-------------|
//! | STEA1 | `2k`   | 2 |
//! | STEA2 | `k`    | 2 |
//! | TEA1  | `3k`   | 3 |
//! | TEA2  | `2k`   | 3 |

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::linspace::{DualElement, Element, Functional, LinalgError, Shape};
use crate::scalar_eps::{ScalarEpsConfig, ScalarEpsTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Stea1,
    Stea2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeaVariant {
    Tea1,
    Tea2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Form {
    One,
    Two,
    Three,
    Four,
}

impl TryFrom<u8> for Form {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Form::One),
            2 => Ok(Form::Two),
            3 => Ok(Form::Three),
            4 => Ok(Form::Four),
            _ => Err(format!("form must be 1..4, got {v}")),
        }
    }
}

impl From<Form> for u8 {
    fn from(f: Form) -> u8 {
        match f {
            Form::One => 1,
            Form::Two => 2,
            Form::Three => 3,
            Form::Four => 4,
        }
    }
}

impl Form {
    pub const ALL: [Form; 4] = [Form::One, Form::Two, Form::Three, Form::Four];
}

#[derive(Debug, Clone)]
pub struct TopoOutput<T> {
    pub k: usize,
    pub n: usize,
    pub element: Element<T>,
    pub valid: bool,
}

#[derive(Debug, Clone)]
struct Slot<T> {
    element: Element<T>,
    valid: bool,
}

impl<T: Field> Slot<T> {
    fn new(element: Element<T>) -> Self {
        let valid = element.is_finite();
        Slot { element, valid }
    }

    fn output(&self, k: usize, n: usize) -> TopoOutput<T> {
        TopoOutput { k, n, element: self.element.clone(), valid: self.valid }
    }
}

/// `base + c·(a − b)`; invalid when anything involved is.
fn combine<T: Field>(base: &Slot<T>, c: T, a: &Slot<T>, b: &Slot<T>) -> Slot<T> {
    let mut e = base.element.clone();
    let diff = a.element.sub(&b.element).expect("shapes fixed at first append");
    e.axpy(c, &diff).expect("shapes fixed at first append");
    let valid = base.valid && a.valid && b.valid && c.finite() && e.is_finite();
    Slot { element: e, valid }
}

fn check_shape<T: Field>(
    shape: &mut Option<Shape>,
    f: &Functional<T>,
    s: &Element<T>,
) -> Result<T, LinalgError> {
    if let Some(sh) = *shape {
        if sh != s.shape() {
            return Err(LinalgError::Dimension { expected: sh, found: s.shape() });
        }
    }
    let v = f.apply(s)?;
    *shape = Some(s.shape());
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopoConfig {
    pub variant: Variant,
    pub form: Form,
    /// Highest half column: elements up to `ε_{2·max_k}` are produced.
    pub max_k: usize,
    pub p: i32,
    pub particular_rules: bool,
    /// Retain every produced element for inspection.
    pub debug_triangle: bool,
}

impl TopoConfig {
    pub fn new(variant: Variant, form: Form, max_k: usize) -> Self {
        TopoConfig { variant, form, max_k, p: 10, particular_rules: true, debug_triangle: false }
    }

    pub fn with_p(mut self, p: i32) -> Self {
        self.p = p;
        self
    }

    pub fn without_rules(mut self) -> Self {
        self.particular_rules = false;
        self
    }

    pub fn with_debug_triangle(mut self) -> Self {
        self.debug_triangle = true;
        self
    }

    fn scalar_config(&self) -> ScalarEpsConfig {
        let mut c = ScalarEpsConfig::new(2 * self.max_k).with_p(self.p);
        c.particular_rules = self.particular_rules;
        c
    }
}

/// STEA1/STEA2 table.
#[derive(Debug, Clone)]
pub struct TopoEpsTable<T: Field> {
    cfg: TopoConfig,
    functional: Arc<Functional<T>>,
    scalar: ScalarEpsTable<T>,
    shape: Option<Shape>,
    /// Even entries of the previous diagonal, columns `0, 2, …, 2·max_k − 2`.
    near: Vec<Slot<T>>,
    /// Even entries of the diagonal before that (STEA1 only).
    far: Vec<Slot<T>>,
    aux: [Option<Slot<T>>; 2],
    peak: usize,
    n_terms: usize,
    triangle: Option<Vec<Vec<TopoOutput<T>>>>,
}

impl<T: Field> TopoEpsTable<T> {
    pub fn new(cfg: TopoConfig, functional: Functional<T>) -> Self {
        TopoEpsTable {
            cfg,
            functional: Arc::new(functional),
            scalar: ScalarEpsTable::new(cfg.scalar_config()),
            shape: None,
            near: Vec::new(),
            far: Vec::new(),
            aux: [None, None],
            peak: 0,
            n_terms: 0,
            triangle: if cfg.debug_triangle { Some(Vec::new()) } else { None },
        }
    }

    pub fn config(&self) -> &TopoConfig {
        &self.cfg
    }

    pub fn functional(&self) -> &Functional<T> {
        &self.functional
    }

    pub fn scalar_table(&self) -> &ScalarEpsTable<T> {
        &self.scalar
    }

    pub fn sigma(&self) -> usize {
        self.scalar.sigma()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    /// Largest number of elements held at once so far.
    pub fn peak_storage(&self) -> usize {
        self.peak
    }

    /// Storage bound for the configured target column.
    pub fn storage_budget(&self) -> usize {
        let k = self.cfg.max_k;
        match self.cfg.variant {
            Variant::Stea1 => 2 * k + 2,
            Variant::Stea2 => k + 2,
        }
    }

    fn meter(&mut self) {
        let live = self.near.len() + self.far.len() + self.aux.iter().flatten().count();
        self.peak = self.peak.max(live);
    }

    /// Element `ε_{2k}^{(n)}` from the debug triangle.
    pub fn debug_entry(&self, k: usize, n: usize) -> Option<&TopoOutput<T>> {
        self.triangle.as_ref()?.get(k)?.get(n)
    }

    fn eps(&self, k: isize, n: usize) -> T {
        self.scalar.get_signed(k, n).unwrap_or_else(|| T::from_f64(f64::NAN))
    }

    /// Scalar coefficient `c` with `ε_{2j+2}^{(n)} = base + c·(a − b)`.
    fn coefficient(&self, j: usize, n: usize) -> T {
        let e = |k: usize, m: usize| self.eps(k as isize, m);
        let em1 = |k: usize, m: usize| self.eps(k as isize - 1, m);
        let r = |x: T| x.recip_or_inf();
        let k = 2 * j;
        match self.cfg.variant {
            Variant::Stea1 => match self.cfg.form {
                Form::One => r((e(k, n + 1) - e(k, n)) * (e(k + 1, n + 1) - e(k + 1, n))),
                Form::Two => (e(k + 1, n) - em1(k, n + 1)) * r(e(k + 1, n + 1) - e(k + 1, n)),
                Form::Three => (e(k + 2, n) - e(k, n + 1)) * r(e(k, n + 1) - e(k, n)),
                Form::Four => (e(k + 1, n) - em1(k, n + 1)) * (e(k + 2, n) - e(k, n + 1)),
            },
            Variant::Stea2 => match self.cfg.form {
                Form::One => r((e(k, n + 2) - e(k, n + 1)) * (e(k + 1, n + 1) - e(k + 1, n))),
                Form::Two => (e(k + 1, n + 1) - em1(k, n + 2)) * r(e(k + 1, n + 1) - e(k + 1, n)),
                Form::Three => (e(k + 2, n) - e(k, n + 1)) * r(e(k, n + 2) - e(k, n + 1)),
                Form::Four => (e(k + 1, n + 1) - em1(k, n + 2)) * (e(k + 2, n) - e(k, n + 1)),
            },
        }
    }

    /// Consumes `S_{n_terms}` and returns every new even-column element of
    /// the ascending diagonal, starting with `ε_0 = S`.
    pub fn append(&mut self, s: Element<T>) -> Result<Vec<TopoOutput<T>>, LinalgError> {
        let sv = check_shape(&mut self.shape, &self.functional, &s)?;
        self.scalar.append(sv);
        let d = self.n_terms;
        let kk = self.cfg.max_k;
        let mut out = Vec::with_capacity(kk + 1);
        self.aux[0] = Some(Slot::new(s));
        self.meter();
        out.push(self.aux[0].as_ref().unwrap().output(0, d));
        let jmax = kk.min(d / 2);
        for j in 0..jmax {
            let n = d - 2 * j - 2;
            let c = self.coefficient(j, n);
            let cur = self.aux[0].as_ref().unwrap();
            let new = match self.cfg.variant {
                Variant::Stea1 => combine(&self.near[j], c, &self.near[j], &self.far[j]),
                Variant::Stea2 => combine(&self.near[j], c, cur, &self.near[j]),
            };
            self.aux[1] = Some(new);
            self.meter();
            let cur = self.aux[0].take().unwrap();
            match self.cfg.variant {
                Variant::Stea1 => self.far[j] = std::mem::replace(&mut self.near[j], cur),
                Variant::Stea2 => self.near[j] = cur,
            }
            self.aux[0] = self.aux[1].take();
            out.push(self.aux[0].as_ref().unwrap().output(j + 1, n));
        }
        let last = self.aux[0].take().unwrap();
        if jmax < kk {
            if jmax < self.near.len() {
                let old = std::mem::replace(&mut self.near[jmax], last);
                if self.cfg.variant == Variant::Stea1 {
                    if jmax < self.far.len() {
                        self.far[jmax] = old;
                    } else {
                        self.far.push(old);
                    }
                }
            } else {
                self.near.push(last);
            }
        }
        self.meter();
        self.n_terms += 1;
        if let Some(tri) = self.triangle.as_mut() {
            for o in &out {
                while tri.len() <= o.k {
                    tri.push(Vec::new());
                }
                tri[o.k].push(o.clone());
            }
        }
        Ok(out)
    }

    pub fn stability_margin(&self, k: usize) -> Vec<T::Real> {
        stability_margin(&self.scalar, k)
    }

    pub fn ratio_series(&self) -> RatioSeries<T> {
        ratio_series(&self.scalar)
    }
}

/// TEA1/TEA2 table with dual elements in the odd columns.
#[derive(Debug, Clone)]
pub struct TeaTable<T> {
    variant: TeaVariant,
    max_k: usize,
    functional: Arc<Functional<T>>,
    shape: Option<Shape>,
    /// Previous diagonal: even columns `0..=2k−2` and odd columns `1..=2k−1`.
    even: Vec<Option<Slot<T>>>,
    odd: Vec<Option<DualElement<T>>>,
    /// Even columns of the diagonal before (TEA1 only).
    far: Vec<Option<Slot<T>>>,
    aux: usize,
    peak: usize,
    n_terms: usize,
}

impl<T: Field> TeaTable<T> {
    pub fn new(variant: TeaVariant, max_k: usize, functional: Functional<T>) -> Self {
        let far_len = if variant == TeaVariant::Tea1 { max_k } else { 0 };
        TeaTable {
            variant,
            max_k,
            functional: Arc::new(functional),
            shape: None,
            even: vec![None; max_k],
            odd: vec![None; max_k],
            far: vec![None; far_len],
            aux: 0,
            peak: 0,
            n_terms: 0,
        }
    }

    pub fn peak_storage(&self) -> usize {
        self.peak
    }

    pub fn storage_budget(&self) -> usize {
        match self.variant {
            TeaVariant::Tea1 => 3 * self.max_k + 3,
            TeaVariant::Tea2 => 2 * self.max_k + 3,
        }
    }

    fn meter(&mut self) {
        let live = self.even.iter().flatten().count()
            + self.odd.iter().flatten().count()
            + self.far.iter().flatten().count()
            + self.aux;
        self.peak = self.peak.max(live);
    }

    fn duality(&self, a: &Element<T>, b: &Element<T>) -> T {
        let diff = a.sub(b).expect("shapes fixed at first append");
        self.functional.apply(&diff).expect("shapes fixed at first append")
    }

    pub fn append(&mut self, s: Element<T>) -> Result<Vec<TopoOutput<T>>, LinalgError> {
        check_shape(&mut self.shape, &self.functional, &s)?;
        let d = self.n_terms;
        let kk = self.max_k;
        let mut out = Vec::new();
        let mut a = Slot::new(s);
        self.aux = 1;
        self.meter();
        out.push(a.output(0, d));
        let mut pending: Option<DualElement<T>> = None;
        for j in 0..=kk {
            if j == kk || d < 2 * j + 1 {
                if let Some(p) = pending.take() {
                    self.odd[j - 1] = Some(p);
                }
                if j < kk {
                    self.store_even(j, a);
                }
                break;
            }
            // odd column 2j+1, n = d − 2j − 1
            let prev_even = self.even[j].clone().expect("previous diagonal present");
            let west = if j == 0 { T::zero() } else { self.odd[j - 1].as_ref().unwrap().coefficient };
            let denom = self.duality(&a.element, &prev_even.element);
            let b = DualElement::new(west + denom.recip_or_inf(), self.functional.clone());
            self.aux = 2;
            self.meter();
            if let Some(p) = pending.take() {
                self.odd[j - 1] = Some(p);
            }
            if d < 2 * j + 2 {
                self.store_even(j, a);
                self.odd[j] = Some(b);
                self.aux = 0;
                break;
            }
            // even column 2j+2, n = d − 2j − 2
            let n = d - 2 * j - 2;
            let prev_odd = self.odd[j].as_ref().unwrap();
            let dual = b.sub(prev_odd);
            let (lead, trail) = match self.variant {
                TeaVariant::Tea1 => (&prev_even, self.far[j].as_ref().unwrap()),
                TeaVariant::Tea2 => (&a, &prev_even),
            };
            let diff = lead.element.sub(&trail.element).unwrap();
            let q = dual.apply(&diff).unwrap();
            let c = combine(&prev_even, q.recip_or_inf(), lead, trail);
            let c = Slot { valid: c.valid && b.is_finite() && prev_odd.is_finite(), ..c };
            self.aux = 3;
            self.meter();
            self.store_even(j, a);
            self.aux = 2;
            pending = Some(b);
            out.push(c.output(j + 1, n));
            a = c;
        }
        self.aux = 0;
        self.n_terms += 1;
        Ok(out)
    }

    fn store_even(&mut self, j: usize, a: Slot<T>) {
        let old = self.even[j].replace(a);
        if self.variant == TeaVariant::Tea1 {
            if let Some(o) = old {
                self.far[j] = Some(o);
            }
        }
    }
}

/// `r_k^{(n)} = (ε_{2k+2}^{(n)} − ε_{2k}^{(n+1)})/(ε_{2k}^{(n+1)} − ε_{2k}^{(n)})`.
#[derive(Debug, Clone, Default)]
pub struct RatioSeries<T> {
    pub values: BTreeMap<(usize, usize), T>,
}

impl<T: Field> RatioSeries<T> {
    /// `r_k^{(n)}` for all available `n`, in order.
    pub fn row(&self, k: usize) -> Vec<(usize, T)> {
        self.values.range((k, 0)..(k + 1, 0)).map(|(&(_, n), &v)| (n, v)).collect()
    }
}

pub fn ratio_series<T: Field>(t: &ScalarEpsTable<T>) -> RatioSeries<T> {
    let mut values = BTreeMap::new();
    let kmax = t.max_col() / 2;
    for k in 0..kmax {
        for n in 0.. {
            let (Some(top), Some(a), Some(b)) = (t.get(2 * k + 2, n), t.get(2 * k, n + 1), t.get(2 * k, n))
            else {
                break;
            };
            values.insert((k, n), (top - a) / (a - b));
        }
    }
    RatioSeries { values }
}

/// Per-n sums `|(ε_{2k+2}^{(n)} − ε_{2k}^{(n)})/Δε_{2k}^{(n)}| + |(ε_{2k+2}^{(n)} − ε_{2k}^{(n+1)})/Δε_{2k}^{(n)}|`.
pub fn stability_margin<T: Field>(t: &ScalarEpsTable<T>, k: usize) -> Vec<T::Real> {
    let mut out = Vec::new();
    for n in 0.. {
        let (Some(top), Some(a), Some(b)) = (t.get(2 * k + 2, n), t.get(2 * k, n + 1), t.get(2 * k, n)) else {
            break;
        };
        let inv = (a - b).recip_or_inf();
        out.push(((top - b) * inv).modulus() + ((top - a) * inv).modulus());
    }
    out
}
