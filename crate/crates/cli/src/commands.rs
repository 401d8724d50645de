use std::fs;
use std::path::Path;

use toral_recurrence::algebra::{parse_rational, ToralAutomorphism};
use toral_recurrence::coding::{cylinder_region, diameter_ratio_check};
use toral_recurrence::dimension::{dim_grid, dim_row, DimRow};
use toral_recurrence::estimate::{depth_schedule_curve, fit_dimension};
use toral_recurrence::layout::{build_layout, cardinality_family, q_to_f64, LayoutMode, LayoutParams, Span};
use toral_recurrence::partition::{
    catalog, geometry_constants, spectral_radius, transition_matrix, validate_partition, MarkovPartition,
};
use toral_recurrence::shift::{
    entropy_estimate, ln_big, topological_entropy, uniform_recurrence_check, Recurrence, ShiftError, Sft, SymbolicWindow,
};
use toral_recurrence::verify::{run_all, run_check, CHECKS};
use toral_recurrence::Execution;

use crate::output::{Cell, Table};
use crate::{Cli, Command, Failure, Outcome, PartitionAction, ShiftChoice, Source};

pub fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match &cli.command {
        Command::Spectrum { a, b, c, d } => spectrum(*a, *b, *c, *d).map(Outcome::from),
        Command::Partition { action, source } => partition(action, source),
        Command::Entropy { source, n } => entropy(source, *n).map(Outcome::from),
        Command::Dim { alpha, grid, alpha_max } => dim(*alpha, *grid, *alpha_max, exec).map(Outcome::from),
        Command::Layout { alpha, theta, k, n1, rounded } => layout(alpha, theta, *k, n1.as_deref(), *rounded).map(Outcome::from),
        Command::Cardinality { delta, n1, k, shift } => cardinality(*delta, *n1, *k, *shift).map(Outcome::from),
        Command::Estimate { alpha, m_max, n_max, shift } => estimate(*alpha, *m_max, *n_max, *shift, exec).map(Outcome::from),
        Command::Recurrence { window, alpha, m, n_max, shift } => recurrence(window, *alpha, *m, *n_max, *shift).map(Outcome::from),
        Command::Cylinder { source, window } => cylinder(source, window).map(Outcome::from),
        Command::Cylinders { source, samples, m_max } => cylinders(source, *samples, *m_max, cli.seed, exec),
        Command::Verify { only } => verify(only, exec),
    }
}

fn load(source: &Source) -> Result<MarkovPartition, Failure> {
    match &source.file {
        Some(path) => load_file(path),
        None => Ok(catalog(&source.catalog)?.1),
    }
}

fn load_file(path: &Path) -> Result<MarkovPartition, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(MarkovPartition::from_json_str(&text)?)
}

fn sft_for(choice: ShiftChoice) -> Result<Sft, Failure> {
    Ok(match choice {
        ShiftChoice::Golden => Sft::golden_mean((1.0 + 5f64.sqrt()) / 2.0)?,
        ShiftChoice::Full2 => Sft::full_shift(2, 2.0)?,
        ShiftChoice::Cat => Sft::from_partition(&catalog("cat")?.1)?,
    })
}

fn quantity_table(rows: Vec<(&str, Cell)>) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (name, v) in rows {
        t.push(vec![name.into(), v]);
    }
    t
}

fn spectrum(a: i64, b: i64, c: i64, d: i64) -> Result<Table, Failure> {
    let m = ToralAutomorphism::new(a, b, c, d)?;
    let s = m.spectrum();
    Ok(quantity_table(vec![
        ("trace", m.trace().into()),
        ("det", m.det().into()),
        ("discriminant", s.field.discriminant().into()),
        ("lambda", s.lambda_f64.into()),
        ("lambda_exact", s.lambda.to_string().into()),
        ("lambda_inverse", s.lambda_inv.to_f64().into()),
        ("stable_eigenvalue", s.stable_eigenvalue.to_f64().into()),
        ("unstable_dir_x", s.unstable_dir[0].to_f64().into()),
        ("unstable_dir_y", s.unstable_dir[1].to_f64().into()),
        ("stable_dir_x", s.stable_dir[0].to_f64().into()),
        ("stable_dir_y", s.stable_dir[1].to_f64().into()),
    ]))
}

fn partition(action: &PartitionAction, source: &Source) -> Result<Outcome, Failure> {
    let p = load(source)?;
    match action {
        PartitionAction::Validate => {
            let report = validate_partition(&p)?;
            let mut t = Table::new(&["check", "passed", "detail"]);
            for (name, c) in [("cover", &report.cover), ("disjoint", &report.disjoint), ("markov", &report.markov)] {
                t.push(vec![name.into(), c.passed.into(), c.detail.clone().into()]);
            }
            let failure = (!report.passed()).then(|| "partition is not a valid Markov partition".to_string());
            Ok(Outcome { table: t, failure })
        }
        PartitionAction::Matrix => {
            let g = transition_matrix(&p)?;
            let mut cols = vec!["from".to_string()];
            cols.extend((0..g.dim()).map(|j| format!("to_{j}")));
            let mut t = Table { columns: cols, rows: Vec::new() };
            for (i, row) in g.rows().iter().enumerate() {
                let mut r: Vec<Cell> = vec![i.into()];
                r.extend(row.iter().map(|&v| Cell::Int(v as i64)));
                t.push(r);
            }
            Ok(t.into())
        }
        PartitionAction::Constants => {
            let c = geometry_constants(&p);
            Ok(quantity_table(vec![
                ("elements", p.len().into()),
                ("c_min", c.c_min.into()),
                ("c_max", c.c_max.into()),
                ("b_min", c.b_min.into()),
                ("h_min", c.h_min.into()),
                ("k0", c.k0.into()),
                ("lipschitz", c.lipschitz.into()),
            ])
            .into())
        }
        PartitionAction::Export => {
            let json = serde_json::to_string_pretty(&p.to_json()).expect("partition JSON");
            Ok(quantity_table(vec![("partition", json.into())]).into())
        }
    }
}

fn entropy(source: &Source, n: usize) -> Result<Table, Failure> {
    let p = load(source)?;
    let s = Sft::from_partition(&p)?;
    let lambda = p.frame().lambda_f64.abs();
    let rho = spectral_radius(s.gamma())?;
    Ok(quantity_table(vec![
        ("lambda", lambda.into()),
        ("log_lambda", lambda.ln().into()),
        ("spectral_radius", rho.into()),
        ("topological_entropy", topological_entropy(&s)?.into()),
        ("entropy_estimate", entropy_estimate(&s, n).into()),
        ("word_length", n.into()),
    ]))
}

fn dim(alpha: Option<f64>, grid: Option<f64>, alpha_max: f64, exec: Execution) -> Result<Table, Failure> {
    let rows: Vec<DimRow> = match (alpha, grid) {
        (Some(a), _) => {
            if !(0.0..=1.0).contains(&a) {
                return Err(Failure::Usage(format!("--alpha must lie in [0, 1], got {a}")));
            }
            vec![dim_row(a)]
        }
        (None, Some(step)) => dim_grid(step, alpha_max, exec)?,
        (None, None) => return Err(Failure::Usage("one of --alpha or --grid is required".into())),
    };
    let mut t = Table::new(&["alpha", "dim_uniform", "dim_asymptotic", "lower", "upper"]);
    for r in rows {
        t.push(vec![r.alpha.into(), r.dim_uniform.into(), r.dim_asymptotic.into(), r.lower.into(), r.upper.into()]);
    }
    Ok(t)
}

fn layout(alpha: &str, theta: &str, k: usize, n1: Option<&str>, rounded: bool) -> Result<Table, Failure> {
    let mode = if rounded { LayoutMode::Rounded } else { LayoutMode::Idealized };
    let mut params = LayoutParams::new(parse_rational(alpha)?, parse_rational(theta)?, k, mode);
    if let Some(n1) = n1 {
        params.n1 = parse_rational(n1)?;
    }
    let l = build_layout(&params)?;
    let mut t = Table::new(&["kind", "left_end", "right_end"]);
    for b in l.right_blocks.iter().chain(&l.left_blocks) {
        t.push(vec![b.label().into(), q_to_f64(&b.lo).into(), q_to_f64(&b.hi).into()]);
    }
    for (i, (lo, hi)) in l.free_intervals.iter().enumerate() {
        t.push(vec![format!("free({})", i + 1).into(), q_to_f64(lo).into(), q_to_f64(hi).into()]);
    }
    Ok(t)
}

fn cardinality(delta: u64, n1: i64, k: usize, shift: ShiftChoice) -> Result<Table, Failure> {
    let s = sft_for(shift)?;
    let fam = cardinality_family(delta, n1, k, &s)?;
    let mut t = Table::new(&["kind", "index", "lo", "hi", "size"]);
    let mut push = |kind: &str, spans: &[Span]| {
        for (i, sp) in spans.iter().enumerate() {
            t.push(vec![kind.into(), (i + 1).into(), sp.lo.into(), sp.hi.into(), sp.len().into()]);
        }
    };
    push("right", &fam.right_blocks);
    push("left", &fam.left_blocks);
    push("gap", &fam.gaps);
    t.push(vec!["witness_count".into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Big(fam.witness_count.to_string())]);
    Ok(t)
}

fn estimate(alpha: f64, m_max: i64, n_max: u64, shift: ShiftChoice, exec: Execution) -> Result<Table, Failure> {
    let s = sft_for(shift)?;
    let lambda = s.lambda();
    let curve = depth_schedule_curve(&s, alpha, m_max, n_max, lambda, exec)?;
    let mut t = Table::new(&["m", "count", "log_count", "slope_running"]);
    let mut seen = Vec::new();
    for p in &curve {
        seen.push((p.m, p.count.clone()));
        let slope = if seen.len() >= 3 {
            fit_dimension(&seen, lambda).map(|c| Cell::Float(c.slope)).unwrap_or(Cell::Empty)
        } else {
            Cell::Empty
        };
        let count = match u64::try_from(&p.count) {
            Ok(v) => Cell::from(v),
            Err(_) => Cell::Big(p.count.to_string()),
        };
        let log = ln_big(&p.count);
        t.push(vec![p.m.into(), count, log.into(), slope]);
    }
    Ok(t)
}

fn recurrence(window: &str, alpha: f64, m: u64, n_max: u64, shift: ShiftChoice) -> Result<Table, Failure> {
    let s = sft_for(shift)?;
    let w: SymbolicWindow = window.parse()?;
    if !w.contains_origin() {
        return Err(ShiftError::DomainMismatch { lo: w.lo(), hi: w.hi() }.into());
    }
    s.check(&w)?;
    let (verdict, depth) = match uniform_recurrence_check(&w, alpha, m, n_max, s.lambda()) {
        Recurrence::Holds => ("holds", Cell::Empty),
        Recurrence::Fails(n) => ("fails", n.into()),
        Recurrence::Undetermined(n) => ("undetermined", n.into()),
    };
    Ok(quantity_table(vec![("verdict", verdict.into()), ("depth", depth)]))
}

fn cylinder(source: &Source, window: &str) -> Result<Table, Failure> {
    let p = load(source)?;
    let w: SymbolicWindow = window.parse()?;
    let c = cylinder_region(&p, &w)?;
    let mut rows: Vec<(String, Cell)> = vec![("diameter".into(), c.diameter.into())];
    for (i, (x, y)) in p.frame().corners_f64(&c.rect).iter().enumerate() {
        rows.push((format!("corner_{i}_x"), (*x).into()));
        rows.push((format!("corner_{i}_y"), (*y).into()));
    }
    let mut t = Table::new(&["quantity", "value"]);
    for (name, v) in rows {
        t.push(vec![name.into(), v]);
    }
    Ok(t)
}

fn cylinders(source: &Source, samples: usize, m_max: u32, seed: u64, exec: Execution) -> Result<Outcome, Failure> {
    let p = load(source)?;
    let report = diameter_ratio_check(&p, samples, m_max, seed, exec)?;
    let mut t = Table::new(&["m", "samples", "min_ratio", "max_ratio", "violations"]);
    for r in &report.rows {
        t.push(vec![(r.m as i64).into(), r.samples.into(), r.min_ratio.into(), r.max_ratio.into(), r.violations.into()]);
    }
    eprintln!(
        "lipschitz: {} pairs, worst ratio {:.6}, {} violations; ratio bounds [{:.6}, {:.6}]",
        report.lipschitz_pairs,
        report.worst_lipschitz_ratio,
        report.lipschitz_violations,
        report.constants.c_min,
        report.constants.c_max
    );
    let total = report.total_violations();
    let failure = (total > 0).then(|| format!("{total} diameter or Lipschitz violations"));
    Ok(Outcome { table: t, failure })
}

fn verify(only: &[u8], exec: Execution) -> Result<Outcome, Failure> {
    if let Some(bad) = only.iter().find(|id| !CHECKS.iter().any(|c| c.0 == **id)) {
        return Err(Failure::Usage(format!("unknown check id {bad}; valid ids are 1..={}", CHECKS.len())));
    }
    let results = if only.is_empty() { run_all(exec) } else { only.iter().map(|&id| run_check(id, exec)).collect() };
    let mut t = Table::new(&["id", "name", "passed", "detail"]);
    for r in &results {
        eprintln!("{}", r.line());
        t.push(vec![(r.id as i64).into(), r.name.into(), r.passed.into(), r.detail.clone().into()]);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let failure = (failed > 0).then(|| format!("{failed} of {} checks failed", results.len()));
    Ok(Outcome { table: t, failure })
}
