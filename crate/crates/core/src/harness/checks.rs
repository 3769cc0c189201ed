//! Randomized invariant suites behind `cdpr check`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{allocate, AllocationConfig, AllocationError};
use crate::attitude::{
    antisym_project, cross, dcm_from_euler321, dcm_from_mrp, dcm_from_quat, dcm_from_rotvec,
    euler321_from_dcm, mrp_from_dcm, quat_from_dcm, rotvec_from_dcm, uncross, ParamKind,
};
use crate::control::{
    error_block_quaternion, error_block_simplified, error_block_so3, error_block_unconstrained,
    feedforward, regressor, CoriolisForm, DesiredPose, ErrorBlock,
};
use crate::dynamics::{wrench_matrix, CdprGeometry, PayloadState, Pose};
use crate::{Mat3, Mat6, Vec3, Vec6, Vec7, GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckSuite {
    Identity,
    Lemma,
    Regressor,
    Allocation,
}

impl CheckSuite {
    pub const ALL: [CheckSuite; 4] = [CheckSuite::Identity, CheckSuite::Lemma, CheckSuite::Regressor, CheckSuite::Allocation];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: CheckSuite,
    pub items: Vec<CheckItem>,
    pub seconds: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

fn item(name: &str, samples: usize, max_residual: f64, tolerance: f64) -> CheckItem {
    CheckItem { name: name.into(), samples, max_residual, tolerance, passed: max_residual < tolerance }
}

fn rand3(rng: &mut ChaCha8Rng, a: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.gen_range(-a..a))
}

fn rand_mat(rng: &mut ChaCha8Rng) -> Mat3 {
    Mat3::from_fn(|_, _| rng.gen_range(-2.0..2.0))
}

fn identity_suite(rng: &mut ChaCha8Rng) -> Vec<CheckItem> {
    let n = 10_000;
    let (mut eq1, mut eq2) = (0.0f64, 0.0f64);
    let mut trips = [0.0f64; 4];
    for _ in 0..n {
        let v = rand3(rng, 2.0);
        let u = rand_mat(rng);
        let lhs = 0.5 * (cross(&v) * u).trace();
        let rhs = v.dot(&uncross(&antisym_project(&u)).expect("projection is antisymmetric"));
        eq1 = eq1.max((lhs + rhs).abs());
        let a = rand_mat(rng);
        let l = cross(&v) * a + a.transpose() * cross(&v);
        let r = cross(&((Mat3::identity() * a.trace() - a) * v));
        eq2 = eq2.max((l - r).abs().max());

        let e = Vec3::new(rng.gen_range(-3.1..3.1), rng.gen_range(-1.5..1.5), rng.gen_range(-3.1..3.1));
        let c = dcm_from_euler321(&e);
        let back = euler321_from_dcm(&c, 1e-3).map(|q| (dcm_from_euler321(&q).matrix() - c.matrix()).abs().max());
        trips[0] = trips[0].max(back.unwrap_or(0.0));
        trips[1] = trips[1].max((dcm_from_quat(&quat_from_dcm(&c)).matrix() - c.matrix()).abs().max());
        trips[2] = trips[2].max((dcm_from_rotvec(&rotvec_from_dcm(&c)).matrix() - c.matrix()).abs().max());
        trips[3] = trips[3].max((dcm_from_mrp(&mrp_from_dcm(&c)).matrix() - c.matrix()).abs().max());
    }
    vec![
        item("projection identity", n, eq1, 1e-12),
        item("cross identity", n, eq2, 1e-12),
        item("euler321 round trip", n, trips[0], 1e-9),
        item("quaternion round trip", n, trips[1], 1e-9),
        item("rotation vector round trip", n, trips[2], 1e-9),
        item("mrp round trip", n, trips[3], 1e-9),
    ]
}

#[derive(Clone, Copy)]
enum Block {
    Unconstrained(ParamKind),
    Quaternion,
    So3,
    Simplified,
}

const BLOCKS: [(&str, Block); 6] = [
    ("euler321", Block::Unconstrained(ParamKind::Euler321)),
    ("rotvec", Block::Unconstrained(ParamKind::RotationVector)),
    ("mrp", Block::Unconstrained(ParamKind::Mrp)),
    ("quat", Block::Quaternion),
    ("so3", Block::So3),
    ("simplified-euler", Block::Simplified),
];

fn block(b: Block, state: &PayloadState, d: &DesiredPose, lambda: &Mat6) -> Option<ErrorBlock> {
    match b {
        Block::Unconstrained(k) => error_block_unconstrained(k, state, d, lambda),
        Block::Quaternion => error_block_quaternion(state, d, lambda),
        Block::So3 => error_block_so3(state, d, lambda),
        Block::Simplified => error_block_simplified(state, d, lambda),
    }
    .ok()
}

fn random_pair(rng: &mut ChaCha8Rng) -> (PayloadState, DesiredPose) {
    let desired = DesiredPose {
        r: rand3(rng, 0.3),
        r_dot: rand3(rng, 0.5),
        r_ddot: rand3(rng, 2.0),
        euler: rand3(rng, 0.6),
        euler_dot: rand3(rng, 1.0),
        euler_ddot: rand3(rng, 3.0),
    };
    let axis = rand3(rng, 1.0).normalize();
    let angle = rng.gen_range(0.0..std::f64::consts::FRAC_PI_3);
    let pose = Pose::new(desired.r + rand3(rng, 0.05), desired.dcm()).perturbed(&Vec3::zeros(), &(axis * angle));
    (PayloadState { pose, nu: Vec6::from_fn(|_, _| rng.gen_range(-1.0..1.0)) }, desired)
}

fn taylor(d: &DesiredPose, h: f64) -> DesiredPose {
    DesiredPose {
        r: d.r + d.r_dot * h + d.r_ddot * (0.5 * h * h),
        r_dot: d.r_dot + d.r_ddot * h,
        r_ddot: d.r_ddot,
        euler: d.euler + d.euler_dot * h + d.euler_ddot * (0.5 * h * h),
        euler_dot: d.euler_dot + d.euler_ddot * h,
        euler_ddot: d.euler_ddot,
    }
}

fn lemma_suite(rng: &mut ChaCha8Rng) -> Vec<CheckItem> {
    let n = 1000;
    let lambda = Mat6::from_diagonal(&Vec6::new(10.0, 9.0, 11.0, 10.0, 8.0, 12.0));
    let mut items = Vec::new();
    for (name, b) in BLOCKS {
        let mut worst = 0.0f64;
        let mut fd = 0.0f64;
        let mut skipped = 0;
        for _ in 0..n {
            let (state, d) = random_pair(rng);
            let Some(blk) = block(b, &state, &d, &lambda) else {
                skipped += 1;
                continue;
            };
            worst = worst.max(blk.contract_residual());
            if !matches!(b, Block::Simplified) {
                let h = 1e-5;
                let at = |dt: f64| {
                    let s = PayloadState { pose: state.pose.advanced(&state.nu, dt), nu: state.nu };
                    block(b, &s, &taylor(&d, dt), &lambda)
                };
                if let (Some(f), Some(bk)) = (at(h), at(-h)) {
                    fd = fd.max(((f.p_tilde - bk.p_tilde) / (2.0 * h) - blk.p_tilde_dot).norm());
                }
            }
        }
        items.push(item(&format!("{name} contract"), n - skipped, worst, 1e-9));
        if !matches!(b, Block::Simplified) {
            items.push(item(&format!("{name} error rate vs finite difference"), n - skipped, fd, 1e-6));
        }
    }
    items
}

fn regressor_suite(rng: &mut ChaCha8Rng) -> Vec<CheckItem> {
    let n = 1000;
    let mut lin = 0.0f64;
    let mut direct = 0.0f64;
    for _ in 0..n {
        let nu_r = Vec6::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        let nu_r_dot = Vec6::from_fn(|_, _| rng.gen_range(-5.0..5.0));
        let omega = rand3(rng, 2.0);
        let a = Vec7::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let b = Vec7::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        for form in [CoriolisForm::Skew, CoriolisForm::OmegaCrossI] {
            let w = regressor(&nu_r, &nu_r_dot, &omega, GRAVITY, form);
            let f = |p: &Vec7| feedforward(p, &nu_r, &nu_r_dot, &omega, GRAVITY, form);
            direct = direct.max((w * a - f(&a)).norm());
            lin = lin.max((f(&(a * x + b * y)) - (f(&a) * x + f(&b) * y)).norm());
        }
    }
    vec![item("W a = f_d(a)", n, direct, 1e-10), item("f_d linear in a", n, lin, 1e-10)]
}

fn allocation_suite(rng: &mut ChaCha8Rng) -> Vec<CheckItem> {
    let geom = CdprGeometry::reference();
    let cfg = AllocationConfig::default();
    let radii = geom.radii();
    let [lo, hi] = cfg.limits;
    let n = 1000;
    let (mut exact, mut band, mut reduced) = (0.0f64, 0.0f64, 0.0f64);
    let (mut free_count, mut clamped_count) = (0, 0);
    for k in 0..n {
        let pose = Pose::new(
            Vec3::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.1..0.1), rng.gen_range(0.35..0.6)),
            dcm_from_rotvec(&rand3(rng, 0.3)),
        );
        let Ok(pi) = wrench_matrix(&geom, &pose) else { continue };
        // alternate between gentle wrenches and ones large enough to clamp
        let scale = if k % 2 == 0 { 20.0 } else { 400.0 };
        let f = Vec6::new(0.0, 0.0, 66.2, 0.0, 0.0, 0.0) + Vec6::from_fn(|i, _| rng.gen_range(-1.0..1.0) * if i < 3 { scale } else { scale / 10.0 });
        match allocate(&pi, &f, &cfg, &radii) {
            Ok(a) if a.clamp_count() == 0 => {
                free_count += 1;
                exact = exact.max((pi.transpose() * a.torques - f).norm());
            }
            Ok(a) => {
                clamped_count += 1;
                let out = a.tensions.iter().map(|&t| (lo - t).max(t - hi).max(0.0)).fold(0.0, f64::max);
                band = band.max(out);
                reduced = reduced.max((pi.transpose() * a.torques - f).norm());
            }
            Err(AllocationError::Infeasible { .. }) => {}
            Err(e) => panic!("unexpected allocation error: {e}"),
        }
    }
    vec![
        item("unclamped exactness", free_count, exact, 1e-9),
        item("clamped tensions in band", clamped_count, band, 1e-9),
        item("clamped reduced-system exactness", clamped_count, reduced, 1e-9),
    ]
}

pub fn run_checks(suite: CheckSuite, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let items = match suite {
        CheckSuite::Identity => identity_suite(&mut rng),
        CheckSuite::Lemma => lemma_suite(&mut rng),
        CheckSuite::Regressor => regressor_suite(&mut rng),
        CheckSuite::Allocation => allocation_suite(&mut rng),
    };
    CheckReport { suite, items, seconds: start.elapsed().as_secs_f64() }
}
