//! Reader and writer for the MATPOWER case-struct subset
//! (`baseMVA`, `bus`, `gen`, `branch`, `gencost`).

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{Branch, Bus, BusType, Generator, PowerNetwork};
use crate::error::{Error, Result};

/// Angle-difference bound used when a case leaves a branch unbounded.
pub const DEFAULT_ANGLE_LIMIT: f64 = PI / 3.0;

const DEFAULT_C2: f64 = 0.01;
const DEFAULT_C1: f64 = 40.0;
const DEFAULT_C0: f64 = 0.0;

struct Matrix {
    rows: Vec<(usize, Vec<f64>)>,
}

fn strip_comment(line: &str) -> &str {
    // '%' inside a quoted string never occurs in the numeric matrices we read.
    match line.find('%') {
        Some(p) => &line[..p],
        None => line,
    }
}

/// Locates `<var>.<name> = [ ... ];` and returns its numeric rows with 1-based
/// line numbers.
fn find_matrix(lines: &[&str], var: &str, name: &str) -> Result<Option<Matrix>> {
    let key = format!("{var}.{name}");
    let mut start = None;
    for (i, raw) in lines.iter().enumerate() {
        let line = strip_comment(raw).trim_start();
        if let Some(rest) = line.strip_prefix(&key) {
            let rest = rest.trim_start();
            if let Some(rest) = rest.strip_prefix('=') {
                if let Some(p) = rest.find('[') {
                    start = Some((i, rest[p + 1..].to_string()));
                    break;
                }
            }
        }
    }
    let Some((first, tail)) = start else { return Ok(None) };

    let mut rows = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut current_line = first + 1;
    let mut closed = false;
    let mut push_text = |text: &str, lineno: usize, rows: &mut Vec<(usize, Vec<f64>)>| -> Result<bool> {
        let mut text = text;
        let mut done = false;
        if let Some(p) = text.find(']') {
            text = &text[..p];
            done = true;
        }
        for segment in text.split_inclusive(';') {
            let ends_row = segment.ends_with(';');
            let body = segment.trim_end_matches(';');
            for tok in body.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                let v = tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("invalid number '{tok}' in {key}"),
                })?;
                if current.is_empty() {
                    current_line = lineno;
                }
                current.push(v);
            }
            if ends_row && !current.is_empty() {
                rows.push((current_line, std::mem::take(&mut current)));
            }
        }
        // A newline also terminates a row in MATLAB matrix syntax.
        if !current.is_empty() {
            rows.push((current_line, std::mem::take(&mut current)));
        }
        Ok(done)
    };

    if push_text(strip_comment(&tail), first + 1, &mut rows)? {
        closed = true;
    }
    let mut i = first + 1;
    while !closed && i < lines.len() {
        if push_text(strip_comment(lines[i]), i + 1, &mut rows)? {
            closed = true;
        }
        i += 1;
    }
    if !closed {
        return Err(Error::Parse { line: first + 1, msg: format!("unterminated matrix {key}") });
    }
    Ok(Some(Matrix { rows }))
}

fn find_scalar(lines: &[&str], var: &str, name: &str) -> Result<Option<(usize, f64)>> {
    let key = format!("{var}.{name}");
    for (i, raw) in lines.iter().enumerate() {
        let line = strip_comment(raw).trim();
        if let Some(rest) = line.strip_prefix(&key) {
            if let Some(rest) = rest.trim_start().strip_prefix('=') {
                let tok = rest.trim().trim_end_matches(';').trim();
                let v = tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("invalid value for {key}: '{tok}'"),
                })?;
                return Ok(Some((i + 1, v)));
            }
        }
    }
    Ok(None)
}

fn struct_name(lines: &[&str]) -> String {
    for raw in lines {
        let line = strip_comment(raw).trim();
        if let Some(rest) = line.strip_prefix("function") {
            if let Some((lhs, _)) = rest.split_once('=') {
                let name = lhs.trim();
                if !name.is_empty() {
                    return name.to_string();
                }
            }
        }
    }
    "mpc".to_string()
}

fn require_cols(row: &(usize, Vec<f64>), n: usize, what: &str) -> Result<()> {
    if row.1.len() < n {
        return Err(Error::Parse {
            line: row.0,
            msg: format!("{what} row has {} columns, expected at least {n}", row.1.len()),
        });
    }
    Ok(())
}

fn angle_bounds(min_deg: Option<f64>, max_deg: Option<f64>) -> (f64, f64) {
    match (min_deg, max_deg) {
        (Some(lo), Some(hi)) if lo == 0.0 && hi == 0.0 => (-DEFAULT_ANGLE_LIMIT, DEFAULT_ANGLE_LIMIT),
        (lo, hi) => {
            let lo = match lo {
                Some(d) if d > -360.0 => d.to_radians(),
                _ => -DEFAULT_ANGLE_LIMIT,
            };
            let hi = match hi {
                Some(d) if d < 360.0 => d.to_radians(),
                _ => DEFAULT_ANGLE_LIMIT,
            };
            (lo, hi)
        }
    }
}

/// Parses MATPOWER case text into a per-unit network.
///
/// Out-of-service branches and generators and isolated buses (type 4) are
/// dropped. A missing `gencost` yields a synthetic quadratic cost. PV buses
/// without an in-service generator are demoted to PQ.
pub fn parse_matpower_case(text: &str) -> Result<PowerNetwork> {
    let lines: Vec<&str> = text.lines().collect();
    let var = struct_name(&lines);
    let (_, base) = find_scalar(&lines, &var, "baseMVA")?
        .ok_or_else(|| Error::Parse { line: 0, msg: "missing baseMVA".into() })?;
    let bus_m = find_matrix(&lines, &var, "bus")?
        .ok_or_else(|| Error::Parse { line: 0, msg: "missing bus matrix".into() })?;
    let gen_m = find_matrix(&lines, &var, "gen")?
        .ok_or_else(|| Error::Parse { line: 0, msg: "missing gen matrix".into() })?;
    let branch_m = find_matrix(&lines, &var, "branch")?
        .ok_or_else(|| Error::Parse { line: 0, msg: "missing branch matrix".into() })?;
    let cost_m = find_matrix(&lines, &var, "gencost")?;

    let mut buses = Vec::with_capacity(bus_m.rows.len());
    let mut isolated = std::collections::HashSet::new();
    for row in &bus_m.rows {
        require_cols(row, 13, "bus")?;
        let c = &row.1;
        let id = c[0];
        if id < 0.0 || id.fract() != 0.0 {
            return Err(Error::Parse { line: row.0, msg: format!("invalid bus id {id}") });
        }
        let bus_type = match c[1] as i64 {
            1 => BusType::PQ,
            2 => BusType::PV,
            3 => BusType::Ref,
            4 => {
                isolated.insert(id as usize);
                continue;
            }
            t => return Err(Error::Parse { line: row.0, msg: format!("unknown bus type {t}") }),
        };
        buses.push(Bus {
            id: id as usize,
            bus_type,
            pd: c[2] / base,
            qd: c[3] / base,
            gs: c[4] / base,
            bs: c[5] / base,
            vm: c[7],
            va: c[8].to_radians(),
            base_kv: c[9],
            v_max: c[11],
            v_min: c[12],
        });
    }
    let known: std::collections::HashSet<usize> = buses.iter().map(|b| b.id).collect();
    let check_bus = |id: f64, line: usize| -> Result<Option<usize>> {
        let id = id as usize;
        if isolated.contains(&id) {
            return Ok(None);
        }
        if !known.contains(&id) {
            return Err(Error::Validation(format!("line {line}: reference to unknown bus {id}")));
        }
        Ok(Some(id))
    };

    let mut costs: Vec<Option<(f64, f64, f64)>> = vec![None; gen_m.rows.len()];
    if let Some(cm) = &cost_m {
        for (g, row) in cm.rows.iter().take(gen_m.rows.len()).enumerate() {
            require_cols(row, 4, "gencost")?;
            let c = &row.1;
            if c[0] as i64 != 2 {
                return Err(Error::Parse {
                    line: row.0,
                    msg: "only polynomial gencost (model 2) is supported".into(),
                });
            }
            let n = c[3] as usize;
            require_cols(row, 4 + n, "gencost")?;
            let coeffs = &c[4..4 + n];
            // highest order first; anything above quadratic must vanish
            let (mut c2, mut c1, mut c0) = (0.0, 0.0, 0.0);
            for (k, &v) in coeffs.iter().enumerate() {
                match n - 1 - k {
                    0 => c0 = v,
                    1 => c1 = v,
                    2 => c2 = v,
                    _ if v != 0.0 => {
                        return Err(Error::Parse {
                            line: row.0,
                            msg: "gencost above quadratic order is not supported".into(),
                        })
                    }
                    _ => {}
                }
            }
            costs[g] = Some((c2, c1, c0));
        }
    } else {
        log::warn!(
            "case has no gencost; using c2={DEFAULT_C2}, c1={DEFAULT_C1}, c0={DEFAULT_C0} ($/MW units)"
        );
    }

    let mut generators = Vec::new();
    for (g, row) in gen_m.rows.iter().enumerate() {
        require_cols(row, 10, "gen")?;
        let c = &row.1;
        let Some(bus) = check_bus(c[0], row.0)? else { continue };
        if c[7] <= 0.0 {
            continue;
        }
        let (c2, c1, c0) = costs[g].unwrap_or((DEFAULT_C2, DEFAULT_C1, DEFAULT_C0));
        generators.push(Generator {
            bus,
            pg: c[1] / base,
            qg: c[2] / base,
            q_max: c[3] / base,
            q_min: c[4] / base,
            vg: c[5],
            p_max: c[8] / base,
            p_min: c[9] / base,
            c2: c2 * base * base,
            c1: c1 * base,
            c0,
        });
    }

    let mut branches = Vec::new();
    for row in &branch_m.rows {
        require_cols(row, 11, "branch")?;
        let c = &row.1;
        let (Some(from), Some(to)) = (check_bus(c[0], row.0)?, check_bus(c[1], row.0)?) else {
            continue;
        };
        if c[10] <= 0.0 {
            continue;
        }
        let (angle_min, angle_max) = angle_bounds(c.get(11).copied(), c.get(12).copied());
        branches.push(Branch {
            from,
            to,
            r: c[2],
            x: c[3],
            b_ch: c[4],
            s_max: if c[5] > 0.0 { Some(c[5] / base) } else { None },
            tau: if c[8] == 0.0 { 1.0 } else { c[8] },
            shift: c[9].to_radians(),
            angle_min,
            angle_max,
        });
    }

    let with_gen: std::collections::HashSet<usize> = generators.iter().map(|g| g.bus).collect();
    for b in &mut buses {
        if b.bus_type == BusType::PV && !with_gen.contains(&b.id) {
            log::warn!("bus {} is PV without an in-service generator; treating as PQ", b.id);
            b.bus_type = BusType::PQ;
        }
    }

    PowerNetwork::new(base, buses, branches, generators, Vec::new())
}

/// Writes a network back as MATPOWER case text (MW / MVAr / degree units).
pub fn write_matpower_case(net: &PowerNetwork, name: &str) -> String {
    let base = net.base_mva();
    let mut s = String::new();
    let _ = writeln!(s, "function mpc = {name}");
    let _ = writeln!(s, "mpc.version = '2';");
    let _ = writeln!(s, "mpc.baseMVA = {base};");
    let _ = writeln!(s, "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin");
    let _ = writeln!(s, "mpc.bus = [");
    for b in net.buses() {
        let t = match b.bus_type {
            BusType::PQ => 1,
            BusType::PV => 2,
            BusType::Ref => 3,
        };
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t1\t{}\t{}\t{}\t1\t{}\t{};",
            b.id,
            t,
            b.pd * base,
            b.qd * base,
            b.gs * base,
            b.bs * base,
            b.vm,
            b.va.to_degrees(),
            b.base_kv,
            b.v_max,
            b.v_min
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "mpc.gen = [");
    for g in net.generators() {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t1\t{}\t{};",
            g.bus,
            g.pg * base,
            g.qg * base,
            g.q_max * base,
            g.q_min * base,
            g.vg,
            base,
            g.p_max * base,
            g.p_min * base
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "mpc.branch = [");
    for br in net.branches() {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t0\t0\t{}\t{}\t1\t{}\t{};",
            br.from,
            br.to,
            br.r,
            br.x,
            br.b_ch,
            br.s_max.map_or(0.0, |v| v * base),
            br.tau,
            br.shift.to_degrees(),
            br.angle_min.to_degrees(),
            br.angle_max.to_degrees()
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "mpc.gencost = [");
    for g in net.generators() {
        let _ = writeln!(s, "\t2\t0\t0\t3\t{}\t{}\t{};", g.c2 / (base * base), g.c1 / base, g.c0);
    }
    let _ = writeln!(s, "];");
    s
}
