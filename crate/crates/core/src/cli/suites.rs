use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, Suite};
use super::report::{Check, Relation};
use crate::brackets::{canonical_algebra_report, poisson_bracket, BracketFamily, PhaseFunction, ALGEBRA_CSV_HEADER};
use crate::dynamics::{
    evolve_kq_p, evolve_q_pi, symplecticity_check, Chart, Integrator, ParticleKinetic, SystemHamiltonian,
};
use crate::error::Result;
use crate::gauge::{curvature_from_commutator, plaquette_holonomy, ComplexField, Grid, LatticeConnection};
use crate::numerics::fitted_order;
use crate::phase_space::ExtendedState;
use crate::quantum::density::DENSITY_CSV_HEADER;
use crate::quantum::{
    build_kinetic_pair_operators, build_operators, commutator_suite, joint_eigenbasis, kinetic_momentum_curvature,
    scatter_statistics, trajectory_density, write_operators, CMatrix, DensityOperator, FieldProfile, GaussianPacket,
    Propagator, C64,
};

const PACKET_CENTER: [f64; 2] = [0.1, -0.05];
const JOINT_BASIS_TOLERANCE: f64 = 1e-8;
const EVOLUTION_ENSEMBLE: usize = 4;
const DENSITY_FRAMES: usize = 10;

/// Files written by one suite, relative to the run's output directory.
pub(crate) struct SuiteOutput {
    root: PathBuf,
    dir: PathBuf,
    pub files: Vec<String>,
}

impl SuiteOutput {
    pub fn create(root: &Path, suite: Suite) -> Result<Self> {
        let dir = root.join(suite.name());
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            root: root.to_path_buf(),
            dir,
            files: Vec::new(),
        })
    }

    fn record(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        let rel = path.strip_prefix(&self.root).unwrap_or(&path);
        self.files.push(rel.to_string_lossy().replace('\\', "/"));
        path
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.record(name);
        std::fs::write(path, contents)?;
        Ok(())
    }

    fn writer(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.record(name);
        Ok(BufWriter::new(File::create(path)?))
    }
}

pub(crate) fn run(suite: Suite, cfg: &ScenarioConfig, out: &mut SuiteOutput) -> Result<Vec<Check>> {
    match suite {
        Suite::Brackets => brackets(cfg, out),
        Suite::Gauge => gauge(cfg, out),
        Suite::Dynamics => dynamics(cfg, out),
        Suite::Quantum => quantum(cfg, out),
    }
}

fn suite_rng(seed: u64, suite: Suite) -> ChaCha8Rng {
    let salt = Suite::ALL.iter().position(|s| *s == suite).unwrap_or(0) as u64 + 1;
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> ExtendedState {
    let mut draw = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let (q, p, b, pi_b) = (draw(), draw(), draw(), draw());
    ExtendedState { q, p, b, pi_b }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn brackets(cfg: &ScenarioConfig, out: &mut SuiteOutput) -> Result<Vec<Check>> {
    let metric = cfg.metric();
    let k = cfg.constants;
    let mut rng = suite_rng(cfg.seed, Suite::Brackets);
    let states: Vec<ExtendedState> = (0..cfg.brackets.states)
        .map(|_| random_state(&mut rng, cfg.dimensions()))
        .collect();

    let mut csv = format!("state,{ALGEBRA_CSV_HEADER}\n");
    let mut worst = [0.0f64; 6];
    for (i, s) in states.iter().enumerate() {
        let report = canonical_algebra_report(s, &metric, &k, cfg.brackets.step)?;
        for row in report.csv_rows() {
            let _ = writeln!(csv, "{i},{row}");
        }
        for (w, fam) in worst.iter_mut().zip(BracketFamily::ALL) {
            *w = w.max(report.max_deviation_of(fam));
        }
    }
    out.text("algebra.csv", &csv)?;

    let mut checks: Vec<Check> = BracketFamily::ALL
        .iter()
        .zip(worst)
        .map(|(fam, w)| Check::new(format!("max_deviation {}", fam.label()), w, Relation::Below, 1e-8))
        .collect();

    let mut sweep = String::from("kind,h,max_abs_error\n");
    for h in [1e-3, 1e-4, 1e-5] {
        let mut dev: f64 = 0.0;
        for s in &states {
            dev = dev.max(canonical_algebra_report(s, &metric, &k, h)?.max_deviation());
        }
        let _ = writeln!(sweep, "coordinate,{h:e},{dev:e}");
        checks.push(Check::new(format!("step_sweep h={h:e}"), dev, Relation::AtMost, h * h));
    }

    let f = PhaseFunction::new("sin q0", |s: &ExtendedState| s.q[0].sin());
    let g = PhaseFunction::new("cos p0 exp B0", |s: &ExtendedState| s.p[0].cos() * s.b[0].exp());
    let s0 = &states[0];
    let exact = -s0.q[0].cos() * s0.p[0].sin() * s0.b[0].exp() * metric.g(0, 0);
    let steps = [0.1, 0.05, 0.025];
    let mut errors = Vec::new();
    for h in steps {
        let e = (poisson_bracket(&f, &g, s0, h)? - exact).abs();
        let _ = writeln!(sweep, "nonlinear,{h:e},{e:e}");
        errors.push(e);
    }
    out.text("step_sweep.csv", &sweep)?;
    checks.push(Check::new(
        "nonlinear_bracket_order",
        fitted_order(&steps, &errors),
        Relation::AtLeast,
        1.9,
    ));
    Ok(checks)
}

fn symmetric_curvature_error(cfg: &ScenarioConfig, n: usize, a: f64) -> Result<(f64, f64)> {
    let grid = Grid::cubic(2, n, a)?;
    let b = cfg.lattice.field_strength;
    let conn = LatticeConnection::symmetric_gauge(grid.clone(), cfg.constants, b)?;
    let kw = cfg.lattice.wavevector;
    let curv = curvature_from_commutator(&conn, &ComplexField::plane_wave(grid.clone(), &[kw, kw])?)?;
    let err = curv
        .valid_points()
        .filter(|&i| !grid.on_boundary(i))
        .map(|i| (curv.get(i, 0, 1).unwrap_or(f64::NAN) - b).abs())
        .fold(0.0, f64::max);
    let c = [n / 2 - 1, n / 2 - 1];
    let idx = grid.index(&c).unwrap_or(0);
    let f = curv.get(idx, 0, 1).unwrap_or(f64::NAN);
    let predicted = -conn.constants().connection_coupling() * f * a * a;
    let arg = plaquette_holonomy(&conn, &c, 0, 1)?.arg();
    Ok((err, ((arg - predicted) / predicted).abs()))
}

fn gauge(cfg: &ScenarioConfig, out: &mut SuiteOutput) -> Result<Vec<Check>> {
    let n = cfg.lattice.points;
    let a = cfg.lattice.spacing;
    let mut checks = Vec::new();

    let grid = Grid::cubic(2, n, a)?;
    let b = cfg.lattice.field_strength;
    let conn = LatticeConnection::symmetric_gauge(grid.clone(), cfg.constants, b)?;
    let kw = cfg.lattice.wavevector;
    let curv = curvature_from_commutator(&conn, &ComplexField::plane_wave(grid.clone(), &[kw, kw])?)?;
    curv.to_data().write_csv(out.writer("curvature_symmetric.csv")?)?;
    conn.to_data().write_binary(out.writer("connection_symmetric.bin")?)?;

    let spacings = [a, a / 2.0, a / 4.0];
    let mut errors = Vec::new();
    let mut holonomy = Vec::new();
    let mut conv = String::from("spacing,max_curvature_error,holonomy_relative_error\n");
    for &s in &spacings {
        let (err, hol) = symmetric_curvature_error(cfg, n, s)?;
        let _ = writeln!(conv, "{s:e},{err:e},{hol:e}");
        errors.push(err);
        holonomy.push(hol);
    }
    out.text("convergence.csv", &conv)?;
    checks.push(Check::new("curvature_error", errors[0], Relation::Below, 5e-3));
    checks.push(Check::new(
        "curvature_order",
        fitted_order(&spacings, &errors),
        Relation::AtLeast,
        1.9,
    ));

    let pure = LatticeConnection::pure_gauge(grid.clone(), cfg.constants)?;
    let flat = curvature_from_commutator(&pure, &ComplexField::plane_wave(grid.clone(), &[kw, kw])?)?;
    flat.to_data().write_csv(out.writer("curvature_pure_gauge.csv")?)?;
    checks.push(Check::new(
        "pure_gauge_max_curvature",
        flat.max_abs(),
        Relation::Below,
        1e-8,
    ));
    checks.push(Check::new(
        "pure_gauge_max_connection",
        pure.max_abs(),
        Relation::Above,
        0.1,
    ));

    let mut hol = String::from("spacing,holonomy_relative_error\n");
    for (s, h) in spacings.iter().zip(&holonomy) {
        let _ = writeln!(hol, "{s:e},{h:e}");
    }
    out.text("holonomy.csv", &hol)?;
    checks.push(Check::new(
        "holonomy_relative_error",
        holonomy[0],
        Relation::Below,
        5e-2,
    ));
    checks.push(Check::new(
        "holonomy_improvement_first_halving",
        holonomy[0] / holonomy[1],
        Relation::Above,
        1.0,
    ));
    checks.push(Check::new(
        "holonomy_improvement_second_halving",
        holonomy[1] / holonomy[2],
        Relation::Above,
        1.0,
    ));
    Ok(checks)
}

fn dynamics(cfg: &ScenarioConfig, out: &mut SuiteOutput) -> Result<Vec<Check>> {
    let k = cfg.constants;
    let h = SystemHamiltonian::new(cfg.metric(), k, cfg.omega0)?.with_kinetic(cfg.integrator.kinetic());
    let quadratic = h.clone().with_kinetic(ParticleKinetic::Nonrelativistic);
    let (dt, steps) = (cfg.integrator.dt, cfg.integrator.steps);
    let mut rng = suite_rng(cfg.seed, Suite::Dynamics);

    let mut table = String::from(
        "state,chart_disagreement,energy_drift_q_pi,energy_drift_Q_p,reversal_error,symplecticity_single_step\n",
    );
    let (mut disagreement, mut drift, mut reversal, mut sympl) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut first = None;
    for i in 0..cfg.integrator.states {
        let s0 = random_state(&mut rng, cfg.dimensions());
        let a = evolve_q_pi(&h, &s0, dt, steps)?;
        let b = evolve_kq_p(&h, &s0, dt, steps)?;
        let dis = a.max_difference(&b)?;
        let (da, db) = (a.max_relative_energy_drift(&h)?, b.max_relative_energy_drift(&h)?);

        let mut rev: f64 = 0.0;
        for chart in [Chart::QPi, Chart::KinQP] {
            let start = chart.encode(&s0, &k)?;
            let mut v = start.clone();
            let integ = Integrator::new(chart, &h);
            integ.advance(&mut v, dt, steps)?;
            integ.advance(&mut v, -dt, steps)?;
            rev = rev.max(max_abs_diff(&v, &start));
        }
        let sy = symplecticity_check(&quadratic, &s0, dt, 1)?;
        let _ = writeln!(table, "{i},{dis:e},{da:e},{db:e},{rev:e},{sy:e}");
        disagreement = disagreement.max(dis);
        drift = drift.max(da).max(db);
        reversal = reversal.max(rev);
        sympl = sympl.max(sy);
        if first.is_none() {
            first = Some((s0, a, b));
        }
    }
    out.text("dual_chart.csv", &table)?;

    let mut checks = vec![
        Check::new("chart_disagreement", disagreement, Relation::Below, 1e-6),
        Check::new("energy_drift", drift, Relation::Below, 1e-5),
        Check::new("reversal_error", reversal, Relation::Below, 1e-10),
        Check::new("symplecticity_single_step", sympl, Relation::Below, 1e-10),
    ];
    if let Some((s0, a, b)) = first {
        out.text("trajectory_q_pi.csv", &a.to_csv(&h)?)?;
        out.text("trajectory_Q_p.csv", &b.to_csv(&h)?)?;
        checks.push(Check::new(
            "symplecticity_full_run",
            symplecticity_check(&quadratic, &s0, dt, steps)?,
            Relation::Below,
            1e-6,
        ));
    }
    Ok(checks)
}

fn random_amplitude(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn quantum(cfg: &ScenarioConfig, out: &mut SuiteOutput) -> Result<Vec<Check>> {
    let k = cfg.constants;
    let t = &cfg.truncation;
    let q = &cfg.quantum;
    let hbar = k.hbar;
    let mut rng = suite_rng(cfg.seed, Suite::Quantum);
    let mut checks = Vec::new();

    // tensor-product algebra
    let ops = build_operators(t.particle, t.field, &k)?;
    let report = commutator_suite(&ops, ops.interior_levels())?;
    out.text("commutators.csv", &report.to_csv())?;
    for row in &report.rows {
        checks.push(Check::new(
            format!("commutator {}", row.label),
            row.interior_defect,
            Relation::Below,
            1e-10,
        ));
    }
    let herm = ops
        .dense()?
        .iter()
        .map(|(_, o)| o.hermiticity_defect())
        .fold(0.0, f64::max);
    checks.push(Check::new("hermiticity", herm, Relation::Below, 1e-12));

    let small = build_operators(t.evolution, t.evolution, &k)?;
    let dense: Vec<(&str, CMatrix)> = small.named().into_iter().map(|(n, o)| (n, o.to_dense())).collect();
    let refs: Vec<(&str, &CMatrix)> = dense.iter().map(|(n, m)| (*n, m)).collect();
    write_operators(out.writer("operators.bin")?, &refs)?;

    // position-grid kinetic momenta
    let packet = GaussianPacket {
        center: PACKET_CENTER,
        width: t.packet_width,
        wavevector: [0.0, 0.0],
    };
    let field = FieldProfile::symmetric_gauge(cfg.lattice.field_strength);
    let mut grid_csv =
        String::from("profile,points_per_axis,spacing,defect,reference,relative_error,commutator_norm,field_norm,boundary_amplitude\n");
    let mut grid_row = |label: &str, c: &crate::quantum::CurvatureCheck| {
        let _ = writeln!(
            grid_csv,
            "{label},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            c.points_per_axis,
            c.spacing,
            c.defect,
            c.reference,
            c.relative_error(),
            c.commutator_norm,
            c.field_norm,
            c.boundary_amplitude
        );
    };
    let base = kinetic_momentum_curvature(&field, t.grid_points, t.grid_spacing, &k, &packet)?;
    grid_row("symmetric", &base);
    checks.push(Check::new(
        "grid_commutator_relative_error",
        base.relative_error(),
        Relation::Below,
        1e-2,
    ));
    let spacings = [t.grid_spacing, t.grid_spacing / 2.0, t.grid_spacing / 4.0];
    let mut errors = Vec::new();
    let mut boundary: f64 = 0.0;
    for &a in &spacings {
        let n = (t.sweep_extent / a).round() as usize;
        let c = kinetic_momentum_curvature(&field, n, a, &k, &packet)?;
        grid_row("symmetric_sweep", &c);
        errors.push(c.relative_error());
        boundary = boundary.max(c.boundary_amplitude);
    }
    checks.push(Check::new(
        "grid_commutator_order",
        fitted_order(&spacings, &errors),
        Relation::AtLeast,
        1.9,
    ));
    checks.push(Check::new("grid_boundary_amplitude", boundary, Relation::Below, 1e-5));
    let flat = kinetic_momentum_curvature(&FieldProfile::pure_gauge(), t.grid_points, t.grid_spacing, &k, &packet)?;
    grid_row("pure_gauge", &flat);
    out.text("grid_commutator.csv", &grid_csv)?;
    checks.push(Check::new(
        "grid_pure_gauge_commutator",
        flat.commutator_norm,
        Relation::Below,
        1e-8,
    ));
    checks.push(Check::new(
        "grid_pure_gauge_field",
        flat.field_norm,
        Relation::Above,
        0.1,
    ));

    let times: Vec<f64> = (0..=q.samples)
        .map(|i| q.duration * i as f64 / q.samples as f64)
        .collect();

    // density-operator evolution
    let pair = build_kinetic_pair_operators(t.evolution, t.evolution, &k)?;
    let h_small = pair.hamiltonian(cfg.omega0)?;
    let prop = Propagator::new(&h_small, hbar)?;
    let mut weights: Vec<f64> = (0..EVOLUTION_ENSEMBLE).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut members = Vec::new();
    for _ in 0..EVOLUTION_ENSEMBLE {
        let (alpha, beta) = (random_amplitude(&mut rng), random_amplitude(&mut rng));
        members.push(pair.gaussian_state(alpha, beta, cfg.omega0)?);
    }
    let rho0 = DensityOperator::from_matrix(DensityOperator::ensemble(weights, members)?.to_matrix())?;
    let purity0 = rho0.purity();
    let mut evo = String::from("t,trace,purity,min_eigenvalue,hermiticity,roundtrip_error\n");
    let (mut trace_dev, mut purity_dev, mut min_eig, mut roundtrip) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for &time in &times {
        let rho = prop.evolve(&rho0, time)?;
        let back = prop.evolve(&rho, -time)?;
        let (tr, pu, me, rt) = (rho.trace(), rho.purity(), rho.min_eigenvalue(), back.distance(&rho0)?);
        let _ = writeln!(
            evo,
            "{time:e},{tr:e},{pu:e},{me:e},{:e},{rt:e}",
            rho.hermiticity_defect()
        );
        trace_dev = trace_dev.max((tr - 1.0).abs());
        purity_dev = purity_dev.max((pu - purity0).abs());
        min_eig = min_eig.min(me);
        roundtrip = roundtrip.max(rt);
    }
    out.text("evolution.csv", &evo)?;
    checks.push(Check::new("trace_deviation", trace_dev, Relation::Below, 1e-10));
    checks.push(Check::new("purity_deviation", purity_dev, Relation::Below, 1e-10));
    checks.push(Check::new("min_eigenvalue", min_eig, Relation::AtLeast, -1e-10));
    checks.push(Check::new("roundtrip_error", roundtrip, Relation::Below, 1e-10));

    // trajectory density and scatter
    let kin = build_kinetic_pair_operators(t.particle, t.field, &k)?;
    let h_full = kin.hamiltonian(cfg.omega0)?;
    let prop = Propagator::new(&h_full, hbar)?;
    let basis = joint_eigenbasis(
        &kin.kin_q.to_hermitian()?,
        &kin.kin_pi.to_hermitian()?,
        JOINT_BASIS_TOLERANCE,
        cfg.seed,
    )?;
    checks.push(Check::new(
        "joint_basis_residual",
        basis.residual_a.max(basis.residual_b),
        Relation::Below,
        1e-6,
    ));
    checks.push(Check::new(
        "joint_basis_completeness",
        basis.completeness_defect,
        Relation::Below,
        1e-10,
    ));

    let mut initial = vec![("ground".to_string(), prop.ground_state())];
    for i in 0..q.gaussian_states {
        let (alpha, beta) = (random_amplitude(&mut rng), random_amplitude(&mut rng));
        initial.push((format!("gaussian{i}"), kin.gaussian_state(alpha, beta, cfg.omega0)?));
    }
    let frame_every = (q.samples / DENSITY_FRAMES).max(1);
    let mut scatter = String::from("state,t,delta_Q,delta_pi,product,total_G,min_G\n");
    let (mut sum_dev, mut min_g, mut min_ratio, mut ground_ratio) =
        (0.0f64, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for (label, psi0) in &initial {
        let mut density = format!("{DENSITY_CSV_HEADER}\n");
        for (i, &time) in times.iter().enumerate() {
            let psi = prop.evolve_state(psi0, time);
            let g = trajectory_density(&DensityOperator::pure(psi)?, &basis, time)?;
            let stats = scatter_statistics(&g)?;
            let ratio = stats.product / (hbar / 2.0);
            let _ = writeln!(
                scatter,
                "{label},{time:e},{:e},{:e},{:e},{:e},{:e}",
                stats.delta_q,
                stats.delta_pi,
                stats.product,
                g.total(),
                g.min()
            );
            sum_dev = sum_dev.max((g.total() - 1.0).abs());
            min_g = min_g.min(g.min());
            min_ratio = min_ratio.min(ratio);
            if label == "ground" {
                ground_ratio = ground_ratio.min(ratio);
            }
            if i % frame_every == 0 && (label == "ground" || label == "gaussian0") {
                density.push_str(&g.csv_rows());
            }
        }
        if label == "ground" || label == "gaussian0" {
            out.text(&format!("density_{label}.csv"), &density)?;
        }
    }
    out.text("scatter.csv", &scatter)?;
    checks.push(Check::new("density_normalization", sum_dev, Relation::Below, 1e-10));
    checks.push(Check::new("density_min", min_g, Relation::AtLeast, -1e-12));
    checks.push(Check::new(
        "scatter_ratio_ground",
        ground_ratio,
        Relation::AtLeast,
        1.0 - 1e-2,
    ));
    checks.push(Check::new(
        "scatter_ratio_min",
        min_ratio,
        Relation::AtLeast,
        1.0 - 1e-2,
    ));
    Ok(checks)
}
