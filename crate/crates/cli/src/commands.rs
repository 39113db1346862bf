use std::fmt::Write as _;
use std::fs;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use sympcap::capacity::{bordeaux_bottle_fixture, CapacityAmount, CapacityValue};
use sympcap::ebk::{
    blob_check, density_of_states, density_of_states_numerical, quantize_quadratic, spectrum_1d,
    spectrum_separable, PlanckConfig, QuantumBlobIndex, SkippedLevel, SpectrumEntry, SpectrumResult,
};
use sympcap::nonsqueezing::{
    evolve_ball_shadows, linear_shadow_area, nonsqueeze_ensemble, EvolveOptions, FlowSpec,
    SeparableHamiltonian, SeparableSystem,
};
use sympcap::plane::PlaneSelector;
use sympcap::region::RegionDescriptor;
use sympcap::symplectic::{
    random_symplectic, symplectic_defect, williamson, MatrixDoc, QuadraticHamiltonian, SymplecticMatrix, DEFAULT_SYMPLECTIC_TOL,
};
use sympcap::{capacity::Ball, Error, Result};

use crate::args::{self, KeyValues};
use crate::table::{Cell, Table};
use crate::{Cli, Command, HamiltonianArgs, RegionArgs};

/// A result in both output shapes.
pub struct Rendered {
    pub json: Value,
    pub table: Table,
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub fn dispatch(cli: &Cli) -> Result<Rendered> {
    let cfg = PlanckConfig::new(cli.hbar)?;
    match &cli.command {
        Command::Capacity(region) => capacity(region),
        Command::Williamson(h) => williamson_cmd(h),
        Command::Shadow { matrix, random, radius, plane } => shadow(cli, matrix, random, *radius, plane),
        Command::NonsqueezeEnsemble { n, count, sigma } => ensemble(*n, *count, *sigma, cli.seed),
        Command::Evolve { potential, dof, radius, samples, dt, times, cell, plane, dump_points } => {
            let system = separable_system(potential, *dof)?;
            let opts = EvolveOptions {
                samples: *samples,
                grid_cell: *cell,
                snapshot_times: args::parse_list(times).map_err(|_| invalid(format!("--times: cannot parse '{times}'")))?,
                seed: cli.seed,
                keep_points: dump_points.is_some(),
            };
            evolve(system, *radius, *dt, opts, plane, dump_points.as_deref())
        }
        Command::Quantize1d { potential, nmax } => {
            let pot = args::potential(potential)?;
            spectrum(&spectrum_1d(&pot, *nmax, &cfg)?)
        }
        Command::QuantizeQuadratic { hamiltonian, quanta, nmax } => {
            let h = hamiltonian_input(hamiltonian)?;
            let states = quanta_list(h.dof(), quanta.as_deref(), *nmax)?;
            let mut entries = states
                .iter()
                .map(|q| quantize_quadratic(&h, q, &cfg))
                .collect::<Result<Vec<_>>>()?;
            sort_entries(&mut entries);
            spectrum(&SpectrumResult { hbar: cfg.hbar, entries, skipped: Vec::new() })
        }
        Command::QuantizeSeparable { potential, quanta, nmax } => {
            let pots = args::potentials(potential)?;
            let states = quanta_list(pots.len(), quanta.as_deref(), *nmax)?;
            let mut entries = Vec::new();
            let mut skipped = Vec::new();
            for q in states {
                match spectrum_separable(&pots, &q, &cfg) {
                    Ok(e) => entries.push(e),
                    Err(err @ Error::LevelNotBound { .. }) if nmax.is_some() => {
                        skipped.push(SkippedLevel { quanta: q, reason: err.to_string() })
                    }
                    Err(e) => return Err(e),
                }
            }
            sort_entries(&mut entries);
            spectrum(&SpectrumResult { hbar: cfg.hbar, entries, skipped })
        }
        Command::Dos { hamiltonian, energy, step } => dos(hamiltonian, energy, *step, &cfg),
        Command::BlobCheck { capacity, region } => blob(*capacity, region, cli.tol.unwrap_or(1e-9), &cfg),
        Command::BottleDemo { radius, neck, n } => bottle(*radius, *neck, *n),
    }
}

fn region_descriptor(r: &RegionArgs) -> Result<Option<RegionDescriptor>> {
    let given = [r.ball.is_some(), r.cylinder.is_some(), r.ellipsoid.is_some(), r.bottle.is_some(), r.region.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if given > 1 {
        return Err(invalid("give exactly one of --ball, --cylinder, --ellipsoid, --bottle, --region"));
    }
    let d = if let Some(t) = &r.ball {
        let mut kv = KeyValues::parse("--ball", t)?;
        let d = RegionDescriptor::Ball { radius: kv.require_f64(&["R", "radius"])?, n: kv.require_usize(&["N", "n"])? };
        kv.finish()?;
        d
    } else if let Some(t) = &r.cylinder {
        let mut kv = KeyValues::parse("--cylinder", t)?;
        let radius = kv.require_f64(&["R", "radius"])?;
        let n = kv.require_usize(&["N", "n"])?;
        let axis = kv.usize(&["axis"])?;
        let plane = kv.string(&["plane"])?.map(|p| p.parse::<PlaneSelector>()).transpose()?;
        kv.finish()?;
        RegionDescriptor::Cylinder { radius, n, axis, plane }
    } else if let Some(t) = &r.ellipsoid {
        let mut kv = KeyValues::parse("--ellipsoid", t)?;
        let omegas = kv.list(&["omegas", "omega"])?.ok_or_else(|| invalid("--ellipsoid: missing omegas"))?;
        let m = kv.f64(&["m"])?.unwrap_or(1.0);
        let energy = kv.require_f64(&["E", "energy"])?;
        kv.finish()?;
        let h = QuadraticHamiltonian::oscillator(m, &omegas)?;
        RegionDescriptor::Ellipsoid { hamiltonian: MatrixDoc::from_matrix(h.matrix())?, energy }
    } else if let Some(t) = &r.bottle {
        let mut kv = KeyValues::parse("--bottle", t)?;
        let radius = kv.require_f64(&["R", "radius"])?;
        let neck = kv.require_f64(&["r", "neck"])?;
        let n = kv.usize(&["N", "n"])?.unwrap_or(2);
        kv.finish()?;
        RegionDescriptor::Bottle { radius, neck, n }
    } else if let Some(j) = &r.region {
        args::json_input("--region", j)?
    } else {
        return Ok(None);
    };
    Ok(Some(d))
}

fn capacity_table(c: &CapacityValue) -> Table {
    let mut t = Table::new(["value", "exact"]);
    let v = match c.value {
        CapacityAmount::Finite(v) => v,
        CapacityAmount::Infinite => f64::INFINITY,
    };
    t.push(vec![v.into(), c.exact.into()]);
    t
}

fn capacity(r: &RegionArgs) -> Result<Rendered> {
    let d = region_descriptor(r)?.ok_or_else(|| invalid("no region given"))?;
    let c = d.capacity()?;
    Ok(Rendered { json: to_json(&c), table: capacity_table(&c) })
}

fn hamiltonian_input(h: &HamiltonianArgs) -> Result<QuadraticHamiltonian> {
    match (&h.matrix, &h.oscillator) {
        (Some(m), None) => {
            let doc: MatrixDoc = args::json_input("--matrix", m)?;
            QuadraticHamiltonian::new(doc.to_matrix()?)
        }
        (None, Some(t)) => {
            let mut kv = KeyValues::parse("--oscillator", t)?;
            let omegas = kv.list(&["omegas", "omega"])?.ok_or_else(|| invalid("--oscillator: missing omegas"))?;
            let m = kv.f64(&["m"])?.unwrap_or(1.0);
            kv.finish()?;
            QuadraticHamiltonian::oscillator(m, &omegas)
        }
        _ => Err(invalid("give exactly one of --matrix, --oscillator")),
    }
}

fn williamson_cmd(h: &HamiltonianArgs) -> Result<Rendered> {
    let h = hamiltonian_input(h)?;
    let w = williamson(&h)?;
    let json = json!({
        "n": h.dof(),
        "omegas": w.omegas,
        "s": MatrixDoc::from_matrix(w.s.matrix())?,
        "residual": w.residual,
    });
    let mut t = Table::new(["mode", "omega"]);
    for (k, o) in w.omegas.iter().enumerate() {
        t.push(vec![(k + 1).into(), (*o).into()]);
    }
    Ok(Rendered { json, table: t })
}

fn planes_for(dof: usize, given: &[String]) -> Result<Vec<PlaneSelector>> {
    if given.is_empty() || given.iter().any(|p| p == "all") {
        return Ok(PlaneSelector::all(dof));
    }
    given
        .iter()
        .map(|p| {
            let p: PlaneSelector = p.parse()?;
            p.validate(dof)?;
            Ok(p)
        })
        .collect()
}

fn shadow(cli: &Cli, matrix: &Option<String>, random: &Option<Vec<String>>, radius: f64, plane: &[String]) -> Result<Rendered> {
    let tol = cli.tol.unwrap_or(DEFAULT_SYMPLECTIC_TOL);
    let s = match (matrix, random) {
        (Some(m), None) => {
            let doc: MatrixDoc = args::json_input("--matrix", m)?;
            SymplecticMatrix::with_tolerance(doc.to_matrix()?, tol)?
        }
        (None, Some(t)) => {
            let mut kv = KeyValues::parse("--random", t)?;
            let n = kv.require_usize(&["N", "n"])?;
            let sigma = kv.f64(&["sigma"])?.unwrap_or(0.5);
            kv.finish()?;
            random_symplectic(n, sigma, cli.seed)?
        }
        _ => return Err(invalid("give exactly one of --matrix, --random")),
    };
    let planes = planes_for(s.dof(), plane)?;
    let reports = planes
        .iter()
        .map(|&p| linear_shadow_area(&s, radius, p))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(["plane", "area", "bound", "bound_applies", "satisfied"]);
    for r in &reports {
        t.push(vec![r.plane.to_string().into(), r.area.into(), r.bound.into(), r.bound_applies.into(), r.satisfied.into()]);
    }
    let json = json!({
        "n": s.dof(),
        "radius": radius,
        "symplectic_defect": symplectic_defect(s.matrix())?,
        "reports": reports,
    });
    Ok(Rendered { json, table: t })
}

fn ensemble(n: usize, count: usize, sigma: f64, seed: u64) -> Result<Rendered> {
    let s = nonsqueeze_ensemble(n, count, sigma, seed)?;
    let mut t = Table::new([
        "n",
        "count",
        "sigma",
        "seed",
        "min_conjugate_det",
        "min_nonconjugate_det",
        "nonconjugate_witness_member",
        "nonconjugate_witness_plane",
        "conjugate_bound_holds",
        "max_symplectic_defect",
    ]);
    let witness = s.nonconjugate_witness.as_ref();
    t.push(vec![
        s.n.into(),
        s.count.into(),
        s.sigma.into(),
        s.seed.into(),
        s.min_conjugate_det.into(),
        s.min_nonconjugate_det.into(),
        witness.map_or(Cell::Empty, |w| w.member.into()),
        witness.map_or(Cell::Empty, |w| w.plane.to_string().into()),
        s.conjugate_bound_holds.into(),
        s.max_symplectic_defect.into(),
    ]);
    Ok(Rendered { json: to_json(&s), table: t })
}

fn separable_system(potential: &[String], dof: Option<usize>) -> Result<SeparableSystem> {
    let pots = args::potentials(potential)?;
    match (pots.len(), dof) {
        (0, _) => Err(invalid("--potential is required")),
        (1, Some(n)) => SeparableSystem::uniform(n, pots[0].clone()),
        (k, Some(n)) if k != n => Err(Error::Dimension(format!("{k} potentials given for --dof {n}"))),
        _ => SeparableSystem::new(pots),
    }
}

fn evolve(
    system: SeparableSystem,
    radius: f64,
    dt: f64,
    opts: EvolveOptions,
    plane: &[String],
    dump: Option<&std::path::Path>,
) -> Result<Rendered> {
    let n = system.dof();
    let planes = planes_for(n, plane)?;
    let flow = FlowSpec::new(Arc::new(system.clone()), dt, 0)?;
    let ball = Ball::centered(n, radius)?;
    let out = evolve_ball_shadows(&ball, &flow, &planes, &opts)?;
    if let Some(path) = dump {
        let mut text = String::from("time,plane,x,y\n");
        for c in &out.clouds {
            let plane = format!("\"{}\"", c.plane);
            for p in &c.points {
                let _ = writeln!(text, "{},{plane},{},{}", crate::table::float(c.time), crate::table::float(p[0]), crate::table::float(p[1]));
            }
        }
        fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut t = Table::new(["time", "plane", "area", "bound", "satisfied"]);
    for r in &out.reports {
        t.push(vec![r.time.into(), r.report.plane.to_string().into(), r.report.area.into(), r.report.bound.into(), r.report.satisfied.into()]);
    }
    let json = json!({
        "n": n,
        "system": system,
        "radius": radius,
        "dt": dt,
        "samples": opts.samples,
        "grid_cell": opts.grid_cell,
        "seed": opts.seed,
        "reports": out.reports,
    });
    Ok(Rendered { json, table: t })
}

/// All `N`-tuples of quantum numbers with sum at most `nmax`, by total then lexicographically.
fn quanta_up_to(n: usize, nmax: u32) -> Vec<Vec<u32>> {
    fn fill(prefix: &mut Vec<u32>, left: u32, slots: usize, out: &mut Vec<Vec<u32>>) {
        if slots == 0 {
            if left == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            fill(prefix, left - k, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=nmax {
        fill(&mut Vec::with_capacity(n), total, n, &mut out);
    }
    out
}

const MAX_STATES: usize = 100_000;

fn quanta_list(n: usize, quanta: Option<&str>, nmax: Option<u32>) -> Result<Vec<Vec<u32>>> {
    match (quanta, nmax) {
        (Some(q), None) => {
            let q = args::parse_u32_list(q)?;
            if q.len() != n {
                return Err(Error::Dimension(format!("{} quantum numbers for N = {n}", q.len())));
            }
            Ok(vec![q])
        }
        (None, Some(k)) => {
            // C(k + n, n) states
            let count = (1..=n).fold(1f64, |acc, i| acc * (k as f64 + i as f64) / i as f64);
            if count > MAX_STATES as f64 {
                return Err(invalid(format!("--nmax {k} with N = {n} asks for {count:.0} states (limit {MAX_STATES})")));
            }
            Ok(quanta_up_to(n, k))
        }
        _ => Err(invalid("give exactly one of --quanta, --nmax")),
    }
}

fn sort_entries(entries: &mut [SpectrumEntry]) {
    entries.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| b.quanta.cmp(&a.quanta)));
}

fn spectrum(s: &SpectrumResult) -> Result<Rendered> {
    let n = s.entries.first().map_or(1, |e| e.quanta.len());
    let names = |base: &str| -> Vec<String> {
        if n == 1 {
            vec![base.to_string()]
        } else {
            (1..=n).map(|k| format!("{base}_{k}")).collect()
        }
    };
    let mut header = names("n");
    header.push("E".into());
    header.extend(names("action"));
    header.extend(names("maslov"));
    let mut t = Table::new(header);
    for e in &s.entries {
        let mut row: Vec<Cell> = e.quanta.iter().map(|&q| q.into()).collect();
        row.push(e.energy.into());
        row.extend(e.actions.iter().map(|&a| a.into()));
        row.extend(e.maslov.iter().map(|&m| m.into()));
        t.push(row);
    }
    Ok(Rendered { json: to_json(s), table: t })
}

fn dos(h: &HamiltonianArgs, energy: &str, step: f64, cfg: &PlanckConfig) -> Result<Rendered> {
    let h = hamiltonian_input(h)?;
    let energies = args::parse_list(energy).map_err(|_| invalid(format!("--energy: cannot parse '{energy}'")))?;
    if energies.is_empty() {
        return Err(invalid("--energy needs at least one value"));
    }
    let mut points = Vec::new();
    let mut t = Table::new(["energy", "analytic", "numerical"]);
    for &e in &energies {
        let analytic = match density_of_states(&h, e, cfg) {
            Ok(g) => Some(g),
            Err(Error::UnsupportedForClosedForm(_)) => None,
            Err(err) => return Err(err),
        };
        let numerical = density_of_states_numerical(&h, e, cfg, step)?;
        t.push(vec![e.into(), analytic.into(), numerical.into()]);
        points.push(json!({ "energy": e, "analytic": analytic, "numerical": numerical }));
    }
    let json = json!({ "n": h.dof(), "hbar": cfg.hbar, "step": step, "points": points });
    Ok(Rendered { json, table: t })
}

fn blob(capacity: Option<f64>, region: &RegionArgs, tol: f64, cfg: &PlanckConfig) -> Result<Rendered> {
    let cap = match (capacity, region_descriptor(region)?) {
        (Some(v), None) => {
            if !(v > 0.0) {
                return Err(invalid(format!("--capacity must be positive, got {v}")));
            }
            if v.is_infinite() {
                CapacityValue::infinite()
            } else {
                CapacityValue::exact(v)
            }
        }
        (None, Some(d)) => d.capacity()?,
        _ => return Err(invalid("give exactly one of --capacity or a region")),
    };
    let n = blob_check(&cap, cfg, tol)?;
    let value = cap.finite().expect("blob_check rejects infinite capacities");
    let target = n.map(|n| QuantumBlobIndex { n }.target_area(cfg));
    let json = json!({
        "capacity": cap,
        "hbar": cfg.hbar,
        "h": cfg.h(),
        "tolerance": tol,
        "n": n,
        "target_area": target,
        "is_blob": n.is_some(),
    });
    let mut t = Table::new(["capacity", "n", "target_area", "is_blob"]);
    t.push(vec![value.into(), n.map_or(Cell::Empty, Cell::from), target.into(), n.is_some().into()]);
    Ok(Rendered { json, table: t })
}

fn bottle(radius: f64, neck: f64, n: usize) -> Result<Rendered> {
    let f = bordeaux_bottle_fixture(radius, neck, n)?;
    let cap = f.capacity.finite().expect("bottle capacity is finite");
    let strict = f.neck_loop_action < cap;
    let json = json!({
        "radius": radius,
        "neck": neck,
        "n": n,
        "capacity": f.capacity,
        "neck_loop_action": f.neck_loop_action,
        "neck_below_capacity": strict,
        "certificate": f.report,
    });
    let mut t = Table::new(["radius", "neck", "capacity", "neck_loop_action", "neck_below_capacity"]);
    t.push(vec![radius.into(), neck.into(), cap.into(), f.neck_loop_action.into(), strict.into()]);
    Ok(Rendered { json, table: t })
}
