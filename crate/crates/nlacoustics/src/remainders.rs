//! Remainder terms of every model pair as table-driven term lists, their
//! evaluation, and the residual-consistency oracle.
//!
//! Each pair links an exact operator applied to an ansatz with a model
//! operator and an explicitly graded remainder:
//!
//! `exact(ansatz) = model part + Σ ε^{k/2}·coeff·term`.
//!
//! Terms are written in the pair's potential (`u`, `Φ` or `Ψ`; see
//! [`crate::ansatz`]) using plain frame derivatives: "evolution" is `t`, `z` or
//! `τ` and grid axis 0 is `x1`, `τ` or `z`.

use serde::{Deserialize, Serialize};

use crate::ansatz::{
    ansatz_exprs, frame_calculus, kuznetsov_rho1, kuznetsov_rho2, kzk_first, kzk_second, npe_first, npe_second,
    potential,
};
use crate::calculus::{evaluate_all, sum, Expr, FrameCalculus, JetContext, LevelStack};
use crate::coefficients::ModelCoefficients;
use crate::error::{Error, Result};
use crate::grid::{Field, Frame, Grid};
use crate::ns_euler::pressure_curvature;
use crate::operators::{kuznetsov_operator, ns_operator, westervelt_operator};
use crate::solvers::ModelKind;

/// A pair of models linked by a remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pair {
    NsKuznetsov,
    NsKzk,
    NsNpe,
    KuznetsovKzk,
    KuznetsovNpe,
    KuznetsovWestervelt,
}

impl Pair {
    pub const ALL: [Pair; 6] = [
        Pair::NsKuznetsov,
        Pair::NsKzk,
        Pair::NsNpe,
        Pair::KuznetsovKzk,
        Pair::KuznetsovNpe,
        Pair::KuznetsovWestervelt,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Pair::NsKuznetsov => "ns-kuznetsov",
            Pair::NsKzk => "ns-kzk",
            Pair::NsNpe => "ns-npe",
            Pair::KuznetsovKzk => "kuznetsov-kzk",
            Pair::KuznetsovNpe => "kuznetsov-npe",
            Pair::KuznetsovWestervelt => "kuznetsov-westervelt",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Pair> {
        Pair::ALL
            .into_iter()
            .find(|p| p.tag() == tag)
            .ok_or_else(|| Error::InvalidInput(format!("unknown pair '{tag}'")))
    }

    /// The model whose potential the remainder is written in.
    pub fn potential_model(self) -> ModelKind {
        match self {
            Pair::NsKuznetsov | Pair::KuznetsovWestervelt => ModelKind::Kuznetsov,
            Pair::NsKzk | Pair::KuznetsovKzk => ModelKind::Kzk,
            Pair::NsNpe | Pair::KuznetsovNpe => ModelKind::Npe,
        }
    }

    pub fn frame(self) -> Frame {
        match self.potential_model() {
            ModelKind::Kzk => Frame::Kzk,
            ModelKind::Npe => Frame::Npe,
            _ => Frame::Physical,
        }
    }

    /// Power `p` with `graded sum = ε^p · R`.
    pub fn grade(self) -> i32 {
        match self {
            Pair::NsKuznetsov | Pair::NsKzk | Pair::NsNpe => 3,
            _ => 2,
        }
    }

    fn is_flow(self) -> bool {
        self.grade() == 3
    }
}

/// Which transcription of the tables to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemainderForm {
    /// The uncorrected term list, taken literally.
    AsPrinted,
    /// The term list with the corrections that make each identity exact.
    #[default]
    Consistent,
}

/// The two readings of the fourth mass line of the NS–KZK remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassLine4 {
    /// `(1/c) ∂zJ ∂τJ`.
    DzJDtauJ,
    /// `(1/c) ∂zJ ∂τΦ`.
    #[default]
    DzJDtauPhi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemainderOptions {
    pub form: RemainderForm,
    pub mass_line4: MassLine4,
}

impl Default for RemainderOptions {
    fn default() -> Self {
        RemainderOptions { form: RemainderForm::Consistent, mass_line4: MassLine4::DzJDtauPhi }
    }
}

impl RemainderOptions {
    /// The uncorrected term tables, read literally.
    pub fn as_printed() -> Self {
        RemainderOptions { form: RemainderForm::AsPrinted, mass_line4: MassLine4::DzJDtauJ }
    }
}

/// Which conservation law / equation a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    Mass,
    /// Momentum along grid axis `k`.
    Momentum(usize),
    /// Single-equation pairs.
    Scalar,
}

impl Group {
    pub fn label(self) -> String {
        match self {
            Group::Mass => "mass".into(),
            Group::Momentum(k) => format!("momentum{k}"),
            Group::Scalar => "scalar".into(),
        }
    }
}

/// One remainder term `ε^{eps_halves/2} · coeff · expr`.
#[derive(Debug, Clone)]
pub struct Term {
    pub id: String,
    pub group: Group,
    pub eps_halves: u32,
    pub coeff: f64,
    pub expr: Expr,
}

impl Term {
    pub fn eps_power(&self) -> f64 {
        self.eps_halves as f64 / 2.0
    }

    /// `ε^{k/2}·coeff` for a given `ε`.
    pub fn weight(&self, eps: f64) -> f64 {
        eps.powf(self.eps_power()) * self.coeff
    }
}

struct Table {
    terms: Vec<Term>,
    consistent: bool,
}

impl Table {
    fn new(opts: RemainderOptions) -> Self {
        Table { terms: Vec::new(), consistent: opts.form == RemainderForm::Consistent }
    }

    fn add(&mut self, id: &str, group: Group, eps_halves: u32, coeff: f64, expr: Expr) {
        self.terms.push(Term { id: id.into(), group, eps_halves, coeff, expr });
    }

    /// Term present only in the uncorrected form.
    fn printed(&mut self, id: &str, group: Group, eps_halves: u32, coeff: f64, expr: Expr) {
        if !self.consistent {
            self.add(id, group, eps_halves, coeff, expr);
        }
    }

    /// Correction present only in the consistent form.
    fn correction(&mut self, id: &str, group: Group, eps_halves: u32, coeff: f64, expr: Expr) {
        if self.consistent {
            self.add(id, group, eps_halves, coeff, expr);
        }
    }

    /// Term whose coefficient is corrected in the consistent form.
    fn amended(&mut self, id: &str, group: Group, eps_halves: u32, printed: f64, consistent: f64, expr: Expr) {
        let coeff = if self.consistent { consistent } else { printed };
        self.add(id, group, eps_halves, coeff, expr);
    }
}

/// `Σ_{j ≥ 1} a_{yj} b_{yj}` over the transverse axes.
fn grad_y_dot(a: &Expr, b: &Expr, ndim: usize) -> Expr {
    sum((1..ndim).map(|j| a.d(j, 1) * b.d(j, 1)))
}

fn lap_y(a: &Expr, ndim: usize) -> Expr {
    sum((1..ndim).map(|j| a.d(j, 2)))
}

fn ns_kuznetsov_terms(m: &ModelCoefficients, ndim: usize, t: &mut Table) {
    let c2 = m.c * m.c;
    let c4 = c2 * c2;
    let u = potential();
    let ut = u.ev();
    let rho1 = kuznetsov_rho1(m, &u);
    let rho2 = kuznetsov_rho2(m, &u, ndim);
    let grad2 = sum((0..ndim).map(|i| u.d(i, 1).sq()));
    let lap = sum((0..ndim).map(|i| u.d(i, 2)));
    let grad_dot = |a: &Expr, b: &Expr| sum((0..ndim).map(|i| a.d(i, 1) * b.d(i, 1)));
    let mass = Group::Mass;
    t.amended(
        "m3.1",
        mass,
        6,
        m.rho0 * (m.gamma - 2.0) / (2.0 * c4 * c2),
        m.rho0 * (m.gamma - 1.0) / (2.0 * c4 * c2),
        ut.clone() * ut.sq().ev(),
    );
    t.add("m3.2", mass, 6, m.rho0 / c4, ut.clone() * grad2.ev());
    t.add("m3.3", mass, 6, m.nu / c4, ut.clone() * lap.ev());
    t.printed("m3.4", mass, 6, -m.rho0 / c2, ut.clone() * lap.clone());
    t.add("m3.5", mass, 6, -1.0, grad_dot(&rho2, &u));
    t.add("m3.6", mass, 6, -1.0, rho2.clone() * lap.clone());
    t.printed("m4.1", mass, 8, 1.0 / c2, ut.clone() * grad_dot(&rho2, &u));
    t.printed("m4.2", mass, 8, 1.0 / c2, ut.clone() * rho2.clone() * lap);
    let kappa = pressure_curvature(m);
    for k in 0..ndim {
        let g = Group::Momentum(k);
        t.add(&format!("p3.1[{k}]"), g, 6, 0.5, rho1.clone() * grad2.d(k, 1));
        t.add(&format!("p3.2[{k}]"), g, 6, -1.0, rho2.clone() * ut.d(k, 1));
        t.add(&format!("p4.1[{k}]"), g, 8, 0.5, rho2.clone() * grad2.d(k, 1));
        t.correction(&format!("pc3.1[{k}]"), g, 6, 2.0 * kappa, (rho1.clone() * rho2.clone()).d(k, 1));
        t.correction(&format!("pc4.1[{k}]"), g, 8, kappa, rho2.sq().d(k, 1));
    }
}

fn ns_kzk_terms(m: &ModelCoefficients, ndim: usize, opts: RemainderOptions, t: &mut Table) {
    let c = m.c;
    let c2 = c * c;
    let phi = potential();
    let i = kzk_first(m, &phi);
    let j = kzk_second(m, &phi);
    let pt = phi.d(0, 1);
    let pz = phi.ev();
    let ptt = phi.d(0, 2);
    let pzz = pz.ev();
    let ptz = pz.d(0, 1);
    let lyp = lap_y(&phi, ndim);
    let mass = Group::Mass;
    // ε³
    t.add("m3.1", mass, 6, -m.rho0, pzz.clone());
    t.add("m3.2", mass, 6, 1.0 / c, i.ev() * pt.clone());
    t.add("m3.3", mass, 6, 1.0 / c, i.d(0, 1) * pz.clone());
    t.add("m3.4", mass, 6, -1.0, grad_y_dot(&i, &phi, ndim));
    t.add("m3.5", mass, 6, 2.0 / c, i.clone() * ptz.clone());
    t.add("m3.6", mass, 6, -1.0, i.clone() * lyp.clone());
    t.add("m3.7", mass, 6, -1.0 / c2, j.d(0, 1) * pt.clone());
    t.add("m3.8", mass, 6, -1.0 / c2, j.clone() * ptt.clone());
    // ε⁴
    t.add("m4.1", mass, 8, -1.0, i.ev() * pz.clone());
    t.add("m4.2", mass, 8, -1.0, i.clone() * pzz.clone());
    let line4 = match opts.mass_line4 {
        MassLine4::DzJDtauJ => j.ev() * j.d(0, 1),
        MassLine4::DzJDtauPhi => j.ev() * pt.clone(),
    };
    t.add("m4.3", mass, 8, 1.0 / c, line4);
    t.add("m4.4", mass, 8, 1.0 / c, j.d(0, 1) * pz.clone());
    t.add("m4.5", mass, 8, -1.0, grad_y_dot(&j, &phi, ndim));
    t.add("m4.6", mass, 8, 2.0 / c, j.clone() * ptz.clone());
    t.add("m4.7", mass, 8, -1.0, j.clone() * lyp.clone());
    // ε⁵
    t.add("m5.1", mass, 10, -1.0, j.ev() * pz.clone());
    t.add("m5.2", mass, 10, -1.0, j.clone() * pzz.clone());

    let a = Expr::lin(vec![(-2.0 / c, pz.clone() * pt.clone()), (1.0, grad_y_dot(&phi, &phi, ndim))]);
    let b = Expr::lin(vec![(-2.0 / c, ptz.clone()), (1.0, lyp.clone())]);
    let q = pt.sq().scale(1.0 / c2);
    let zz = pz.sq();
    let ax = Group::Momentum(0);
    // ε³
    t.add("e3.1", ax, 6, -m.rho0 / (2.0 * c), a.d(0, 1));
    t.add("e3.2", ax, 6, -m.nu / c, b.d(0, 1));
    t.add("e3.3", ax, 6, -1.0 / (2.0 * c), i.clone() * q.d(0, 1));
    t.add("e3.4", ax, 6, 1.0 / c, j.clone() * ptt.clone());
    // ε⁴
    t.add("e4.1", ax, 8, m.rho0 / 2.0, a.ev());
    t.add("e4.2", ax, 8, m.nu, b.ev());
    t.add("e4.3", ax, 8, -1.0 / (2.0 * c), i.clone() * a.d(0, 1));
    t.add("e4.4", ax, 8, 0.5, i.clone() * q.ev());
    t.add("e4.5", ax, 8, -1.0, j.clone() * ptz.clone());
    t.add("e4.6", ax, 8, -1.0 / (2.0 * c), j.clone() * q.d(0, 1));
    t.add("e4.7", ax, 8, -m.rho0 / (2.0 * c), zz.d(0, 1));
    t.add("e4.8", ax, 8, -m.nu / c, pzz.d(0, 1));
    // ε⁵
    t.add("e5.1", ax, 10, -1.0 / (2.0 * c), i.clone() * zz.d(0, 1));
    t.add("e5.2", ax, 10, 0.5, i.clone() * a.ev());
    t.add("e5.3", ax, 10, 0.5, j.clone() * q.ev());
    t.add("e5.4", ax, 10, -1.0 / (2.0 * c), j.clone() * a.d(0, 1));
    t.add("e5.5", ax, 10, m.rho0 / 2.0, zz.ev());
    t.add("e5.6", ax, 10, m.nu, pzz.ev());
    // ε⁶
    t.add("e6.1", ax, 12, 0.5, i.clone() * zz.ev());
    t.add("e6.2", ax, 12, -1.0 / (2.0 * c), j.clone() * zz.d(0, 1));
    t.printed("e6.3", ax, 12, 0.5, j.clone() * a.clone());
    t.correction("e6.3", ax, 12, 0.5, j.clone() * a.ev());
    // ε⁷
    t.add("e7.1", ax, 14, 0.5, j.clone() * zz.ev());
    // state-law closure κ∇̃(2ε³IJ + ε⁴J²), axial part with ∂x1 = ε∂z − ∂τ/c
    let kappa = pressure_curvature(m);
    let ij = i.clone() * j.clone();
    let jj = j.sq();
    t.correction("ec3.1", ax, 6, -2.0 * kappa / c, ij.d(0, 1));
    t.correction("ec4.1", ax, 8, 2.0 * kappa, ij.ev());
    t.correction("ec4.2", ax, 8, -kappa / c, jj.d(0, 1));
    t.correction("ec5.1", ax, 10, kappa, jj.ev());

    for y in 1..ndim {
        let g = Group::Momentum(y);
        t.add(&format!("y7.1[{y}]"), g, 7, m.rho0 / 2.0, a.d(y, 1));
        t.add(&format!("y7.2[{y}]"), g, 7, m.nu, b.d(y, 1));
        t.add(&format!("y7.3[{y}]"), g, 7, 0.5, i.clone() * q.d(y, 1));
        t.add(&format!("y7.4[{y}]"), g, 7, -1.0, j.clone() * pt.d(y, 1));
        t.add(&format!("y9.1[{y}]"), g, 9, 0.5, i.clone() * a.d(y, 1));
        t.add(&format!("y9.2[{y}]"), g, 9, 0.5, j.clone() * q.d(y, 1));
        t.add(&format!("y9.3[{y}]"), g, 9, m.rho0 / 2.0, zz.d(y, 1));
        t.add(&format!("y9.4[{y}]"), g, 9, m.nu, pzz.d(y, 1));
        t.add(&format!("y11.1[{y}]"), g, 11, 0.5, i.clone() * zz.d(y, 1));
        t.add(&format!("y11.2[{y}]"), g, 11, 0.5, j.clone() * a.d(y, 1));
        t.add(&format!("y13.1[{y}]"), g, 13, 0.5, j.clone() * zz.d(y, 1));
        t.correction(&format!("yc7.1[{y}]"), g, 7, 2.0 * kappa, ij.d(y, 1));
        t.correction(&format!("yc9.1[{y}]"), g, 9, kappa, jj.d(y, 1));
    }
}

fn ns_npe_terms(m: &ModelCoefficients, ndim: usize, t: &mut Table) {
    let c = m.c;
    let psi = potential();
    let xi = npe_first(m, &psi);
    let chi = npe_second(m, &psi);
    let pz = psi.d(0, 1);
    let pzz = psi.d(0, 2);
    let ptz = psi.ev().d(0, 1);
    let lyp = lap_y(&psi, ndim);
    let mass = Group::Mass;
    t.add("m3.1", mass, 6, 1.0, chi.ev());
    t.add("m3.2", mass, 6, -1.0, grad_y_dot(&xi, &psi, ndim));
    t.add("m3.3", mass, 6, -1.0, xi.clone() * lyp.clone());
    t.add("m3.4", mass, 6, -1.0, chi.d(0, 1) * pz.clone());
    t.add("m3.5", mass, 6, -1.0, chi.clone() * pzz.clone());
    t.add("m4.1", mass, 8, -1.0, grad_y_dot(&chi, &psi, ndim));
    t.add("m4.2", mass, 8, -1.0, chi.clone() * lyp.clone());

    let yy = grad_y_dot(&psi, &psi, ndim);
    let zz = pz.sq();
    let ax = Group::Momentum(0);
    t.amended("e3.1", ax, 6, -m.rho0 / c, m.rho0 / c, pz.clone() * ptz.clone());
    t.add("e3.2", ax, 6, m.rho0 / 2.0, yy.d(0, 1));
    t.add("e3.3", ax, 6, m.nu, lyp.d(0, 1));
    t.add("e3.4", ax, 6, 0.5, xi.clone() * zz.d(0, 1));
    t.add("e3.5", ax, 6, c, chi.clone() * pzz.clone());
    t.add("e4.1", ax, 8, 0.5, xi.clone() * yy.d(0, 1));
    t.add("e4.2", ax, 8, -1.0, chi.clone() * ptz.clone());
    t.add("e4.3", ax, 8, 0.5, chi.clone() * zz.d(0, 1));
    t.add("e5.1", ax, 10, 0.5, chi.clone() * yy.d(0, 1));
    let kappa = pressure_curvature(m);
    let xc = xi.clone() * chi.clone();
    let cc = chi.sq();
    t.correction("ec3.1", ax, 6, 2.0 * kappa, xc.d(0, 1));
    t.correction("ec4.1", ax, 8, kappa, cc.d(0, 1));
    for y in 1..ndim {
        let g = Group::Momentum(y);
        let pty = psi.ev().d(y, 1);
        t.amended(&format!("y7.1[{y}]"), g, 7, -m.rho0 / c, m.rho0 / c, pz.clone() * pty.clone());
        t.add(&format!("y7.2[{y}]"), g, 7, m.rho0 / 2.0, yy.d(y, 1));
        t.add(&format!("y7.3[{y}]"), g, 7, m.nu, lyp.d(y, 1));
        t.add(&format!("y7.4[{y}]"), g, 7, 0.5, xi.clone() * zz.d(y, 1));
        t.add(&format!("y7.5[{y}]"), g, 7, c, chi.clone() * pz.d(y, 1));
        t.add(&format!("y9.1[{y}]"), g, 9, 0.5, xi.clone() * yy.d(y, 1));
        t.add(&format!("y9.2[{y}]"), g, 9, -1.0, chi.clone() * pty);
        t.add(&format!("y9.3[{y}]"), g, 9, 0.5, chi.clone() * zz.d(y, 1));
        t.add(&format!("y11.1[{y}]"), g, 11, 0.5, chi.clone() * yy.d(y, 1));
        t.correction(&format!("yc7.1[{y}]"), g, 7, 2.0 * kappa, xc.d(y, 1));
        t.correction(&format!("yc9.1[{y}]"), g, 9, kappa, cc.d(y, 1));
    }
}

fn kuznetsov_kzk_terms(m: &ModelCoefficients, ndim: usize, t: &mut Table) {
    let c = m.c;
    let phi = potential();
    let pt = phi.d(0, 1);
    let pz = phi.ev();
    let g = Group::Scalar;
    t.add("k2.1", g, 4, -c * c, pz.ev());
    t.add("k2.2", g, 4, 2.0 / c, (pt.clone() * pz.clone()).d(0, 1));
    t.add("k2.3", g, 4, -1.0, grad_y_dot(&phi, &phi, ndim).d(0, 1));
    t.add("k2.4", g, 4, 2.0 * m.nu / (c * m.rho0), pz.d(0, 2));
    t.add("k2.5", g, 4, -m.nu / m.rho0, lap_y(&phi, ndim).d(0, 1));
    t.add("k3.1", g, 6, -1.0, pz.sq().d(0, 1));
    t.add("k3.2", g, 6, -m.nu / m.rho0, pz.ev().d(0, 1));
}

fn kuznetsov_npe_terms(m: &ModelCoefficients, ndim: usize, t: &mut Table) {
    let c = m.c;
    let gm1 = m.gamma - 1.0;
    let psi = potential();
    let pt = psi.ev();
    let pz = psi.d(0, 1);
    let ptz = pt.d(0, 1);
    let g = Group::Scalar;
    t.add("n2.1", g, 4, 1.0, pt.ev());
    t.add("n2.2", g, 4, -m.nu / m.rho0, pt.d(0, 2));
    t.add("n2.3", g, 4, m.nu * c / m.rho0, lap_y(&pz, ndim));
    t.add("n2.4", g, 4, -gm1, pt.clone() * psi.d(0, 2));
    t.add("n2.5", g, 4, -2.0 * gm1, pz.clone() * ptz.clone());
    t.add("n2.6", g, 4, -2.0, pz.clone() * ptz.clone());
    t.add("n2.7", g, 4, 2.0 * c, grad_y_dot(&psi, &pz, ndim));
    t.add("n3.1", g, 6, -m.nu / m.rho0, lap_y(&pt, ndim));
    t.add("n3.2", g, 6, 2.0 * gm1 / c, pt.clone() * ptz);
    t.add("n3.3", g, 6, gm1 / c, pz * pt.ev());
    t.add("n3.4", g, 6, -2.0, grad_y_dot(&psi, &pt, ndim));
    t.add("n4.1", g, 8, -gm1 / (c * c), pt.clone() * pt.ev());
}

fn kuznetsov_westervelt_terms(m: &ModelCoefficients, ndim: usize, t: &mut Table) {
    let c2 = m.c * m.c;
    let u = potential();
    let ut = u.ev();
    let grad2 = sum((0..ndim).map(|i| u.d(i, 1).sq()));
    let lap = |e: &Expr| sum((0..ndim).map(|i| e.d(i, 2)));
    let bflux = Expr::lin(vec![(1.0, grad2), ((m.gamma - 1.0) / (2.0 * c2), ut.sq()), (m.nu / m.rho0, lap(&u))]);
    let u2tt = u.sq().ev().ev();
    let g = Group::Scalar;
    t.amended("w2.1", g, 4, -1.0 / (2.0 * c2), -m.nu / (m.rho0 * c2), lap(&(u.clone() * ut.clone())).ev());
    t.add("w2.2", g, 4, -(m.gamma + 1.0) / (2.0 * c2 * c2), (ut.clone() * u2tt.clone()).ev());
    t.add("w2.3", g, 4, 1.0 / c2, (u.clone() * bflux.ev()).ev());
    t.add("w3.1", g, 6, -(m.gamma + 1.0) / (8.0 * c2 * c2 * c2), u2tt.sq().ev());
}

/// The term list of `pair` on a grid with `ndim` axes.
pub fn remainder_terms(pair: Pair, m: &ModelCoefficients, ndim: usize, opts: RemainderOptions) -> Vec<Term> {
    let mut t = Table::new(opts);
    match pair {
        Pair::NsKuznetsov => ns_kuznetsov_terms(m, ndim, &mut t),
        Pair::NsKzk => ns_kzk_terms(m, ndim, opts, &mut t),
        Pair::NsNpe => ns_npe_terms(m, ndim, &mut t),
        Pair::KuznetsovKzk => kuznetsov_kzk_terms(m, ndim, &mut t),
        Pair::KuznetsovNpe => kuznetsov_npe_terms(m, ndim, &mut t),
        Pair::KuznetsovWestervelt => kuznetsov_westervelt_terms(m, ndim, &mut t),
    }
    t.terms
}

/// Equation groups of `pair` in a fixed order.
pub fn groups(pair: Pair, ndim: usize) -> Vec<Group> {
    if pair.is_flow() {
        std::iter::once(Group::Mass).chain((0..ndim).map(Group::Momentum)).collect()
    } else {
        vec![Group::Scalar]
    }
}

/// KZK operator in potential form:
/// `2c∂τzΦ − (γ+1)/(2c²)∂τ((∂τΦ)²) − ν/(ρ0c²)∂τ³Φ − c²Δ_yΦ`.
pub fn kzk_potential_operator(m: &ModelCoefficients, phi: &Expr, ndim: usize) -> Expr {
    let c = m.c;
    Expr::lin(vec![
        (2.0 * c, phi.ev().d(0, 1)),
        (-(m.gamma + 1.0) / (2.0 * c * c), phi.d(0, 1).sq().d(0, 1)),
        (-m.nu / (m.rho0 * c * c), phi.d(0, 3)),
        (-c * c, lap_y(phi, ndim)),
    ])
}

/// NPE operator in potential form:
/// `−2c∂τzΨ − c²Δ_yΨ + (ν/ρ0)c∂z³Ψ + (γ+1)c/2·∂z((∂zΨ)²)`.
pub fn npe_potential_operator(m: &ModelCoefficients, psi: &Expr, ndim: usize) -> Expr {
    let c = m.c;
    Expr::lin(vec![
        (-2.0 * c, psi.ev().d(0, 1)),
        (-c * c, lap_y(psi, ndim)),
        (m.nu * c / m.rho0, psi.d(0, 3)),
        ((m.gamma + 1.0) * c / 2.0, psi.d(0, 1).sq().d(0, 1)),
    ])
}

/// Exact operator applied to the pair's ansatz, per group.
pub fn exact_operator(pair: Pair, m: &ModelCoefficients, ndim: usize) -> Result<Vec<(Group, Expr)>> {
    let kind = pair.potential_model();
    let fc = frame_calculus(kind, m, ndim);
    let p = potential();
    Ok(match pair {
        Pair::NsKuznetsov | Pair::NsKzk | Pair::NsNpe => {
            let (rho, v) = ansatz_exprs(kind, m, ndim)?;
            let (mass, mom) = ns_operator(&fc, m, &rho, &v);
            std::iter::once((Group::Mass, mass))
                .chain(mom.into_iter().enumerate().map(|(k, e)| (Group::Momentum(k), e)))
                .collect()
        }
        Pair::KuznetsovKzk | Pair::KuznetsovNpe => vec![(Group::Scalar, kuznetsov_operator(&fc, m, &p))],
        Pair::KuznetsovWestervelt => {
            let pi = Expr::lin(vec![(1.0, p.clone()), (m.eps / (2.0 * m.c * m.c), p.sq().ev())]);
            vec![(Group::Scalar, westervelt_operator(&fc, m, &pi))]
        }
    })
}

/// Part of the exact operator carried by the reduced model itself (vanishes,
/// or is of higher order, on model solutions), per group.
pub fn model_part(pair: Pair, m: &ModelCoefficients, ndim: usize) -> Vec<(Group, Expr)> {
    let p = potential();
    let c = m.c;
    let c2 = c * c;
    let eps = m.eps;
    let physical = FrameCalculus::new(Frame::Physical, c, eps, ndim);
    let zero_momentum =
        |out: &mut Vec<(Group, Expr)>| out.extend((0..ndim).map(|k| (Group::Momentum(k), Expr::zero())));
    match pair {
        Pair::NsKuznetsov => {
            let k = kuznetsov_operator(&physical, m, &p);
            let factor = Expr::lin(vec![(1.0, Expr::constant(1.0)), (eps / c2, p.ev())]);
            let mut out = vec![(Group::Mass, (factor * k).scale(eps * m.rho0 / c2))];
            zero_momentum(&mut out);
            out
        }
        Pair::NsKzk => {
            // (ρ0/c²)·[KZK potential operator] with the nonlinear coefficient
            // rewritten through ρ0.
            let mut out = vec![(Group::Mass, kzk_potential_operator(m, &p, ndim).scale(eps * eps * m.rho0 / c2))];
            zero_momentum(&mut out);
            out
        }
        Pair::NsNpe => {
            let mut out = vec![(Group::Mass, npe_potential_operator(m, &p, ndim).scale(eps * eps * m.rho0 / c2))];
            zero_momentum(&mut out);
            out
        }
        Pair::KuznetsovKzk => vec![(Group::Scalar, kzk_potential_operator(m, &p, ndim).scale(eps))],
        Pair::KuznetsovNpe => vec![(Group::Scalar, npe_potential_operator(m, &p, ndim).scale(eps))],
        Pair::KuznetsovWestervelt => {
            let k = kuznetsov_operator(&physical, m, &p);
            vec![(Group::Scalar, Expr::lin(vec![(1.0, k.clone()), (eps / c2, (p * k).ev())]))]
        }
    }
}

/// The potential at one evolution value: a jet of exact evolution derivatives
/// or `2m+1` uniformly spaced levels centred on it.
#[derive(Debug, Clone)]
pub enum PotentialInput {
    Jet(Vec<Field>),
    Levels { levels: Vec<Field>, spacing: f64 },
}

impl PotentialInput {
    fn grid(&self) -> Result<Grid> {
        let f = match self {
            PotentialInput::Jet(j) => j.first(),
            PotentialInput::Levels { levels, .. } => levels.first(),
        };
        Ok(f.ok_or_else(|| Error::MissingInput("potential".into()))?.grid().clone())
    }
}

fn eval_exprs(input: &PotentialInput, exprs: &[Expr]) -> Result<Vec<Vec<f64>>> {
    let grid = input.grid()?;
    match input {
        PotentialInput::Jet(jet) => {
            let ctx = JetContext::new(&grid, vec![jet.iter().map(|f| f.values().to_vec()).collect()])?;
            Ok(evaluate_all(&ctx, exprs)?.iter().map(|v| ctx.value(v)).collect())
        }
        PotentialInput::Levels { levels, spacing } => {
            let st = LevelStack::new(&grid, *spacing, vec![levels.iter().map(|f| f.values().to_vec()).collect()])?;
            evaluate_all(&st, exprs)?.iter().map(|v| st.at_center(v)).collect()
        }
    }
}

fn check_input_grid(pair: Pair, grid: &Grid) -> Result<()> {
    if grid.frame() != pair.frame() {
        return Err(Error::InvalidGrid(format!("pair {} needs a {}-frame potential", pair.tag(), pair.frame().tag())));
    }
    Ok(())
}

/// One evaluated term.
#[derive(Debug, Clone)]
pub struct TermValue {
    pub id: String,
    pub group: Group,
    pub eps_power: f64,
    /// `coeff · expr` (without its ε power).
    pub value: Field,
}

/// Remainder of a pair at one evolution value.
#[derive(Debug, Clone)]
pub struct RemainderEvaluation {
    pub pair: Pair,
    /// `R` per group, i.e. the graded sum divided by `ε^p`.
    pub totals: Vec<(Group, Field)>,
    pub terms: Vec<TermValue>,
}

/// Evaluates every term of `pair` on `input`.
pub fn evaluate_remainder(
    pair: Pair,
    m: &ModelCoefficients,
    input: &PotentialInput,
    opts: RemainderOptions,
) -> Result<RemainderEvaluation> {
    m.validate()?;
    let grid = input.grid()?;
    check_input_grid(pair, &grid)?;
    let ndim = grid.ndim();
    let terms = remainder_terms(pair, m, ndim, opts);
    let exprs: Vec<Expr> = terms.iter().map(|t| t.expr.clone()).collect();
    let vals = eval_exprs(input, &exprs)?;
    let scale = m.eps.powi(-pair.grade());
    let mut totals = Vec::new();
    for g in groups(pair, ndim) {
        let mut acc = vec![0.0; grid.len()];
        for (t, v) in terms.iter().zip(&vals) {
            if t.group == g {
                let w = t.weight(m.eps) * scale;
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += w * x;
                }
            }
        }
        totals.push((g, Field::scalar(grid.clone(), acc)?));
    }
    let terms = terms
        .iter()
        .zip(vals)
        .map(|(t, v)| {
            Ok(TermValue {
                id: t.id.clone(),
                group: t.group,
                eps_power: t.eps_power(),
                value: Field::scalar(grid.clone(), v.into_iter().map(|x| t.coeff * x).collect())?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RemainderEvaluation { pair, totals, terms })
}

/// `exact(ansatz) − model part − graded remainder` per group.
pub fn consistency_defect(
    pair: Pair,
    m: &ModelCoefficients,
    input: &PotentialInput,
    opts: RemainderOptions,
) -> Result<Vec<(Group, Field)>> {
    m.validate()?;
    let grid = input.grid()?;
    check_input_grid(pair, &grid)?;
    let ndim = grid.ndim();
    let exact = exact_operator(pair, m, ndim)?;
    let model = model_part(pair, m, ndim);
    let terms = remainder_terms(pair, m, ndim, opts);
    let mut out = Vec::new();
    let mut exprs = Vec::new();
    for g in groups(pair, ndim) {
        let ex = exact.iter().find(|(k, _)| *k == g).map(|(_, e)| e.clone()).unwrap_or_else(Expr::zero);
        let mo = model.iter().find(|(k, _)| *k == g).map(|(_, e)| e.clone()).unwrap_or_else(Expr::zero);
        let mut parts = vec![(1.0, ex), (-1.0, mo)];
        parts.extend(terms.iter().filter(|t| t.group == g).map(|t| (-t.weight(m.eps), t.expr.clone())));
        exprs.push(Expr::lin(parts));
    }
    let vals = eval_exprs(input, &exprs)?;
    for (g, v) in groups(pair, ndim).into_iter().zip(vals) {
        out.push((g, Field::scalar(grid.clone(), v)?));
    }
    Ok(out)
}

/// Outcome of the residual-consistency oracle for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub pair: Pair,
    pub options: RemainderOptions,
    pub spacings: Vec<f64>,
    /// Combined L² norm of the defect over all groups, per spacing.
    pub defects: Vec<f64>,
    /// Successive defect ratios under spacing halving.
    pub ratios: Vec<f64>,
    /// Scale of the exact operator (for judging plateaus).
    pub operator_norm: f64,
    /// Defect at roundoff level for every spacing: the identity then holds
    /// algebraically on the sampled levels and no shrinkage can be observed.
    pub exact_to_roundoff: bool,
    /// Last ratio within `[3, 5]` (second-order shrinkage), or exact to roundoff.
    pub passed: bool,
}

/// Relative defect below which an identity counts as exact in floating point.
pub const ROUNDOFF_DEFECT: f64 = 1e-11;

/// Number of levels used by the oracle on each side of the centre.
pub const HALF_LEVELS: usize = 4;

/// Default smooth, band-limited potential for the oracle: a few modes along
/// every axis drifting with the evolution variable `s`.
pub fn smooth_test_potential(s: f64, x: &[f64]) -> f64 {
    let a = x[0];
    let b = x.get(1).copied().unwrap_or(0.0);
    (a + 0.7 * s).sin() * (1.0 + 0.3 * b.cos())
        + 0.4 * (2.0 * a - 0.5 * s + 0.3).cos()
        + 0.2 * (a + b + 0.9 * s).sin()
        + 0.1 * s * s * (a - b).cos()
}

/// Builds a level input by sampling `profile(s, x)` at `s = (j − m)h`.
pub fn sample_levels(grid: &Grid, spacing: f64, profile: &dyn Fn(f64, &[f64]) -> f64) -> Result<PotentialInput> {
    let levels = (0..=2 * HALF_LEVELS)
        .map(|j| {
            let s = (j as f64 - HALF_LEVELS as f64) * spacing;
            Field::scalar(grid.clone(), grid.sample(|x| profile(s, x)))
        })
        .collect::<Result<_>>()?;
    Ok(PotentialInput::Levels { levels, spacing })
}

fn combined_norm(fields: &[(Group, Field)]) -> f64 {
    fields.iter().map(|(_, f)| f.l2_norm().powi(2)).sum::<f64>().sqrt()
}

/// Runs the oracle with spacings `h0, h0/2, …` (`refinements + 1` values).
pub fn residual_consistency(
    pair: Pair,
    m: &ModelCoefficients,
    grid: &Grid,
    opts: RemainderOptions,
    h0: f64,
    refinements: usize,
    profile: &dyn Fn(f64, &[f64]) -> f64,
) -> Result<ConsistencyReport> {
    let spacings: Vec<f64> = (0..=refinements).map(|k| h0 / 2f64.powi(k as i32)).collect();
    let mut defects = Vec::new();
    let mut operator_norm = 0.0;
    for &h in &spacings {
        let input = sample_levels(grid, h, profile)?;
        defects.push(combined_norm(&consistency_defect(pair, m, &input, opts)?));
        if operator_norm == 0.0 {
            let ex = exact_operator(pair, m, grid.ndim())?;
            let vals = eval_exprs(&input, &ex.iter().map(|(_, e)| e.clone()).collect::<Vec<_>>())?;
            operator_norm = vals.iter().map(|v| crate::grid::l2_norm(grid, v).powi(2)).sum::<f64>().sqrt();
        }
    }
    let ratios: Vec<f64> = defects.windows(2).map(|w| w[0] / w[1]).collect();
    let exact_to_roundoff = defects.iter().all(|&d| d <= ROUNDOFF_DEFECT * operator_norm.max(1.0));
    let passed = exact_to_roundoff || ratios.last().is_some_and(|r| (3.0..=5.0).contains(r));
    Ok(ConsistencyReport { pair, options: opts, spacings, defects, ratios, operator_norm, exact_to_roundoff, passed })
}

/// Default oracle grid for a pair: two periodic axes of period `2π`.
pub fn default_oracle_grid(pair: Pair) -> Result<Grid> {
    use crate::grid::Axis;
    let names = match pair.frame() {
        Frame::Physical => ["x1", "x2"],
        Frame::Kzk => ["tau", "y"],
        Frame::Npe => ["z", "y"],
    };
    let tp = 2.0 * std::f64::consts::PI;
    Grid::new(vec![Axis::periodic(names[0], tp, 24), Axis::periodic(names[1], tp, 16)], pair.frame())
}
