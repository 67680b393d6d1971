use crate::manifest::{Manifest, Profile};
use crate::{Command, Failure};
use poroperm::biot::{
    sweep_thresholds, threshold_grid, write_sweep, write_time_series, BiotSolver, BiotState, Run,
    SolverConfig,
};
use poroperm::fem::{vertex_rows, write_fields_csv, write_vtk, ElementFields, ProblemKind};
use poroperm::linalg::norm2;
use poroperm::network::build_topology;
use poroperm::percolation::{
    bin_stats, default_bin_centers, default_stages, estimate_threshold, fit_power_law,
    read_records, write_bins, write_records, write_threshold, MonteCarlo,
};
use poroperm::relations::{write_curve, PermeabilityRelation};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

type Outcome = Result<(), Failure>;

pub fn dispatch(command: Command, seed: u64, profile: Profile, out: Option<PathBuf>) -> Outcome {
    match command {
        Command::NetworkSweep {
            topology,
            nx,
            ny,
            trials,
            theta0,
            fit_min_open,
        } => {
            let (dnx, dny, dtrials) = profile.network();
            let (nx, ny, trials) = (
                nx.unwrap_or(dnx),
                ny.unwrap_or(dny),
                trials.unwrap_or(dtrials),
            );
            if trials == 0 {
                return Err(Failure::Usage("--trials must be at least 1".into()));
            }
            let mut m = Manifest::new(
                format!("network-sweep-{topology}-{}", profile.name()),
                seed,
                profile,
                out,
            );
            m.param("topology", topology)
                .param("nx", nx)
                .param("ny", ny)
                .param("trials", trials)
                .param("theta0", theta0);
            let net = build_topology(topology, nx, ny, theta0, seed)?;
            m.param("nodes", net.node_count())
                .param("channels", net.channel_count());
            m.prepare()?;
            let header = m.header();

            let records = MonteCarlo::new(&net)?.sweep(&default_stages(), trials, seed)?;
            write_records(m.create("records.csv")?, &header, topology, &records)?;
            write_bins(
                m.create("bins.csv")?,
                &header,
                &bin_stats(&records, &default_bin_centers())?,
            )?;
            let estimate = estimate_threshold(&records)?;
            write_threshold(
                m.create("threshold.csv")?,
                &header,
                topology,
                &estimate,
                net.channel_count(),
            )?;
            match fit_power_law(&records, &estimate, net.channel_count(), fit_min_open) {
                Ok(fit) => {
                    let mut w = commented_csv(&m, "powerlaw.csv", &header)?;
                    w.write_record([
                        "exponent",
                        "prefactor",
                        "excess_min",
                        "excess_max",
                        "residual",
                        "points",
                    ])?;
                    w.serialize((
                        fit.exponent,
                        fit.prefactor,
                        fit.fit_range.0,
                        fit.fit_range.1,
                        fit.residual,
                        fit.points,
                    ))?;
                    w.flush()?;
                }
                Err(e) => eprintln!("warning: {e}; powerlaw.csv not written"),
            }
            println!(
                "{topology}: p_c = {:.4} over {} blocking trials -> {}",
                estimate.p_c,
                estimate.trials_used,
                m.out.display()
            );
            Ok(())
        }

        Command::ThresholdEstimate { records, nx, ny } => {
            let (topology, recs) = read_records(BufReader::new(File::open(&records)?))?;
            let (dnx, dny, _) = profile.network();
            let (nx, ny) = (nx.unwrap_or(dnx), ny.unwrap_or(dny));
            let net = build_topology(topology, nx, ny, 0.4, seed)?;
            let mut m = Manifest::new(
                format!("threshold-estimate-{topology}-{}", profile.name()),
                seed,
                profile,
                out,
            );
            m.config = Some(records);
            m.param("nx", nx)
                .param("ny", ny)
                .param("channels", net.channel_count());
            m.prepare()?;
            let estimate = estimate_threshold(&recs)?;
            write_threshold(
                m.create("threshold.csv")?,
                &m.header(),
                topology,
                &estimate,
                net.channel_count(),
            )?;
            println!(
                "{topology}: p_c = {:.4} ({} trials)",
                estimate.p_c, estimate.trials_used
            );
            Ok(())
        }

        Command::RelationCurve {
            p_c,
            theta0,
            grain_diameter,
            points,
        } => {
            if points == 0 {
                return Err(Failure::Usage("--points must be at least 1".into()));
            }
            let mut m = Manifest::new(
                format!("relation-curve-{}", profile.name()),
                seed,
                profile,
                out,
            );
            m.param("theta0", theta0)
                .param("grain_diameter", grain_diameter)
                .param("points", points);
            m.prepare()?;
            let grid: Vec<f64> = (1..=points).map(|k| k as f64 / points as f64).collect();
            let mut curves = vec![(
                "curve_kozeny-carman.csv".to_string(),
                PermeabilityRelation::kozeny_carman(grain_diameter)?,
            )];
            for p in p_c {
                curves.push((
                    format!("curve_network-inspired_pc{p}.csv"),
                    PermeabilityRelation::network_inspired(p, theta0, grain_diameter)?,
                ));
            }
            for (name, relation) in curves {
                let mut header = m.header();
                header.push(format!("relation: {}", relation.name()));
                if let Some(theta_hat) = relation.theta_hat() {
                    header.push(format!("theta_hat: {theta_hat}"));
                }
                write_curve(
                    m.create(&name)?,
                    &header,
                    &relation.export_curve(theta0, &grid)?,
                )?;
            }
            println!("curves -> {}", m.out.display());
            Ok(())
        }

        Command::BiotRun { config, t_end } => {
            let mut cfg = SolverConfig::from_file(&config)?;
            apply_time(&mut cfg, t_end, profile);
            cfg.validate()?;
            let mut m = Manifest::new(
                format!("biot-run-{}-{}", stem(&config), profile.name()),
                seed,
                profile,
                out,
            );
            m.config = Some(config);
            describe(&mut m, &cfg);
            m.prepare()?;
            let solver = BiotSolver::new(&cfg)?;
            match solver.run() {
                Ok(run) => write_run(&m, &solver, &run),
                Err(aborted) => {
                    let mut header = m.header();
                    header.push(format!(
                        "aborted at step {}: {}",
                        aborted.step, aborted.source
                    ));
                    write_time_series(
                        m.create("timeseries.csv")?,
                        &header,
                        &aborted.partial.series,
                    )?;
                    Err(Failure::Aborted(Box::new(aborted)))
                }
            }
        }

        Command::ThresholdSweep {
            config,
            spacing,
            points,
            p_c,
            t_end,
        } => {
            let grid = p_c.unwrap_or_else(|| threshold_grid(points));
            if grid.is_empty() {
                return Err(Failure::Usage("empty threshold grid".into()));
            }
            if spacing.is_empty() {
                return Err(Failure::Usage("no mesh spacing given".into()));
            }
            let mut base = SolverConfig::from_file(&config)?;
            apply_time(&mut base, t_end, profile);
            let mut m = Manifest::new(
                format!("threshold-sweep-{}-{}", stem(&config), profile.name()),
                seed,
                profile,
                out,
            );
            m.config = Some(config);
            describe(&mut m, &base);
            m.param("thresholds", grid.len());
            m.prepare()?;
            for dx in spacing {
                let mut cfg = base.clone();
                cfg.dx = dx;
                cfg.dy = dx;
                cfg.validate()?;
                let rows = sweep_thresholds(&cfg, &grid)?;
                let mut header = m.header();
                header.push(format!("spacing: {dx}"));
                write_sweep(m.create(&format!("sweep_dx{dx}.csv"))?, &header, &rows)?;
                let negative: Vec<String> = rows
                    .iter()
                    .filter(|r| r.q_out_avg.is_some_and(|q| q < 0.0))
                    .filter_map(|r| r.p_c.map(|p| format!("{p:.3}")))
                    .collect();
                let failed = rows.iter().filter(|r| r.error.is_some()).count();
                println!(
                    "spacing {dx}: {} runs, {failed} failed, negative mean outflow at [{}]",
                    rows.len(),
                    negative.join(", ")
                );
            }
            Ok(())
        }

        Command::SaddleCheck {
            config,
            spacing,
            factors,
        } => {
            if factors.is_empty() {
                return Err(Failure::Usage("no τκ factors given".into()));
            }
            let mut cfg = match &config {
                Some(path) => SolverConfig::from_file(path)?,
                None => SolverConfig::reference(ProblemKind::HighPumpPressure, spacing),
            };
            cfg.stabilization = false;
            cfg.validate()?;
            let mut m = Manifest::new(
                format!("saddle-check-{}", profile.name()),
                seed,
                profile,
                out,
            );
            m.config = config;
            describe(&mut m, &cfg);
            m.prepare()?;
            let solver = BiotSolver::new(&cfg)?;
            let kappa0 = solver.kappa0()?;
            let prev = solver.initial_state()?;
            let (u0, p0) = solver.solve_saddle_point(&prev)?;
            let ne = solver.sys.mesh.triangle_count();
            let mut w = commented_csv(&m, "saddle.csv", &m.header())?;
            w.write_record(["factor", "tau_kappa_max", "u_energy_distance", "p_distance"])?;
            let mut dists = Vec::new();
            for &f in &factors {
                let (u, p) = solver.solve_block(&vec![f * kappa0; ne], cfg.tau, 0.0, &prev)?;
                let du: Vec<f64> = u.iter().zip(&u0).map(|(a, b)| a - b).collect();
                let dp: Vec<f64> = p.iter().zip(&p0).map(|(a, b)| a - b).collect();
                let d = (solver.sys.a.quad_form(&du).max(0.0).sqrt(), norm2(&dp));
                w.serialize((f, f * cfg.tau * kappa0, d.0, d.1))?;
                println!(
                    "τκ = {:.3e}: ‖u−u₀‖_A = {:.3e}, ‖p−p₀‖ = {:.3e}",
                    f * cfg.tau * kappa0,
                    d.0,
                    d.1
                );
                dists.push(d);
            }
            w.flush()?;
            let monotone = dists.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
            if monotone {
                Ok(())
            } else {
                Err(Failure::Core(poroperm::Error::Solver(
                    "distances to the saddle-point limit are not decreasing".into(),
                )))
            }
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Core(e.into())
    }
}

/// CSV writer whose file starts with the header as `#` lines.
fn commented_csv(
    m: &Manifest,
    name: &str,
    header: &[String],
) -> Result<csv::Writer<BufWriter<File>>, Failure> {
    let mut f = m.create(name)?;
    for line in header {
        writeln!(f, "# {line}")?;
    }
    Ok(csv::Writer::from_writer(f))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "config".into(), |s| s.to_string_lossy().into_owned())
}

/// Explicit `--t-end` wins; otherwise the profile may cap the config's end
/// time. Snapshots past the new end are dropped, and a snapshot at the old
/// end moves to the new one.
fn apply_time(cfg: &mut SolverConfig, t_end: Option<f64>, profile: Profile) {
    let t = match (t_end, profile.t_cap()) {
        (Some(t), _) => t,
        (None, Some(cap)) => cfg.t_end.min(cap),
        (None, None) => cfg.t_end,
    };
    if t == cfg.t_end {
        return;
    }
    let had_final = cfg
        .snapshots
        .iter()
        .any(|s| (s - cfg.t_end).abs() < 0.5 * cfg.tau);
    cfg.snapshots.retain(|&s| s <= t);
    if had_final && !cfg.snapshots.iter().any(|s| (s - t).abs() < 0.5 * cfg.tau) {
        cfg.snapshots.push(t);
    }
    cfg.t_end = t;
}

fn describe(m: &mut Manifest, cfg: &SolverConfig) {
    m.param("problem", cfg.problem)
        .param("relation", cfg.relation.name())
        .param("spacing", format!("{} x {}", cfg.dx, cfg.dy))
        .param("tau", cfg.tau)
        .param("t_end", cfg.t_end)
        .param("stabilization", cfg.stabilization);
    if let Some(theta_hat) = cfg.relation.theta_hat() {
        m.param("theta_hat", theta_hat);
    }
}

fn write_run(m: &Manifest, solver: &BiotSolver, run: &Run) -> Outcome {
    let header = m.header();
    write_time_series(m.create("timeseries.csv")?, &header, &run.series)?;
    for state in &run.snapshots {
        write_snapshot(m, solver, state)?;
    }
    let (outlet_theta, outlet_kappa) = solver.outlet_minima(&run.last, run.kappa0);
    let (min_theta, min_kappa) = solver.global_minima(&run.last, run.kappa0);
    let mut w = commented_csv(m, "summary.csv", &header)?;
    w.write_record([
        "t_end",
        "kappa0",
        "Q_out_avg",
        "outlet_theta_n",
        "outlet_kappa_n",
        "min_theta_n",
        "min_kappa_n",
        "degenerate",
    ])?;
    w.serialize((
        run.last.t,
        run.kappa0,
        run.diagnostics.q_out_avg,
        outlet_theta,
        outlet_kappa,
        min_theta,
        min_kappa,
        run.last.degenerate,
    ))?;
    w.flush()?;
    println!(
        "t = {}: mean outflow {:.5e}, outlet θ/θ₀ {outlet_theta:.4}, min κ/κ₀ {min_kappa:.4}, min θ/θ₀ {min_theta:.4} -> {}",
        run.last.t,
        run.diagnostics.q_out_avg,
        m.out.display()
    );
    Ok(())
}

fn write_snapshot(m: &Manifest, solver: &BiotSolver, s: &BiotState) -> Outcome {
    let relation = &solver.cfg.relation;
    let vertex_kappa: Vec<f64> = s
        .theta_vertex
        .iter()
        .map(|&t| relation.kappa(t).unwrap_or(f64::NAN))
        .collect();
    let fields = ElementFields {
        theta: &s.theta,
        kappa: &s.kappa,
        velocity: &s.velocity,
        vertex_theta: Some(&s.theta_vertex),
        vertex_kappa: Some(&vertex_kappa),
    };
    let mut header = m.header();
    header.push(format!("t: {}", s.t));
    let rows = vertex_rows(&solver.sys, &s.u, &s.p, &fields)?;
    write_fields_csv(m.create(&format!("fields_t{}.csv", s.t))?, &header, &rows)?;
    let title = format!("{} t={}", m.experiment, s.t);
    let mut vtk = m.create(&format!("fields_t{}.vtk", s.t))?;
    write_vtk(&mut vtk, &title, &solver.sys, &s.u, &s.p, &fields)?;
    vtk.flush()?;
    Ok(())
}
