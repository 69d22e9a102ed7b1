use std::path::Path;

use num_rational::BigRational;
use srmag_core::expr::{parse_decimal, ChartPoint};
use srmag_core::scenario::{builtin_source, Scenario, ScenarioError};

use crate::CliError;

/// A certified scenario together with its source text.
pub struct Loaded {
    pub scenario: Scenario,
    pub source: String,
}

/// Reads a scenario file, falling back to the bundled library by name.
pub fn scenario_source(arg: &str) -> Result<String, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        return std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{arg}: {e}")));
    }
    builtin_source(arg)
        .map(str::to_string)
        .ok_or_else(|| CliError::Input(format!("`{arg}` is neither a file nor a bundled scenario")))
}

pub fn scenario_error(e: ScenarioError) -> CliError {
    if e.is_input_error() {
        CliError::Input(e.to_string())
    } else {
        CliError::Certification(e.to_string())
    }
}

pub fn load(arg: &str) -> Result<Loaded, CliError> {
    let source = scenario_source(arg)?;
    let scenario = Scenario::from_toml_str(&source).map_err(scenario_error)?;
    Ok(Loaded { scenario, source })
}

/// Comma-separated list of exactly `N` numbers. Non-finite values parse and
/// are rejected later by the integrators.
pub fn parse_floats<const N: usize>(flag: &str, s: &str) -> Result<[f64; N], CliError> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("{flag}: `{s}` is not a list of numbers")))?;
    vals.try_into()
        .map_err(|v: Vec<f64>| CliError::Input(format!("{flag}: expected {N} values, got {}", v.len())))
}

fn rational(flag: &str, s: &str) -> Result<BigRational, CliError> {
    parse_decimal(s.trim()).ok_or_else(|| CliError::Input(format!("{flag}: `{s}` is not a number")))
}

/// Points file: one `x,y,z` per line, `#` starts a comment.
pub fn parse_points(text: &str) -> Result<Vec<ChartPoint>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let flag = format!("points line {}", n + 1);
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 3 {
            return Err(CliError::Input(format!("{flag}: expected x,y,z")));
        }
        out.push(ChartPoint::new([rational(&flag, c[0])?, rational(&flag, c[1])?, rational(&flag, c[2])?]));
    }
    Ok(out)
}

/// Grid `x0:x1:n,y0:y1:n,z0:z1:n` of exact rational points, `z` fastest.
pub fn parse_grid(spec: &str) -> Result<Vec<ChartPoint>, CliError> {
    let axes: Vec<&str> = spec.split(',').collect();
    if axes.len() != 3 {
        return Err(CliError::Input(format!("--grid: expected three axes, got `{spec}`")));
    }
    let mut values: Vec<Vec<BigRational>> = Vec::with_capacity(3);
    for axis in axes {
        let parts: Vec<&str> = axis.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Input(format!("--grid: axis `{axis}` is not a:b:n")));
        }
        let (a, b) = (rational("--grid", parts[0])?, rational("--grid", parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("--grid: `{}` is not a count", parts[2])))?;
        let vals = match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => {
                let h = (&b - &a) / BigRational::from_integer((n as i64 - 1).into());
                (0..n).map(|i| &a + &h * BigRational::from_integer((i as i64).into())).collect()
            }
        };
        values.push(vals);
    }
    let mut out = Vec::new();
    for x in &values[0] {
        for y in &values[1] {
            for z in &values[2] {
                out.push(ChartPoint::new([x.clone(), y.clone(), z.clone()]));
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Input("--grid describes no points".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_are_exact() {
        let g = parse_grid("0:0:1,-2:2:5,0:1:3").unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g[0].approx(), [0.0, -2.0, 0.0]);
        assert_eq!(g[1].coords()[2].to_string(), "1/2");
        assert!(matches!(parse_grid("0:1:0,0:1:2,0:1:2"), Err(CliError::Input(_))));
        assert!(matches!(parse_grid("0:1:2,0:1:2"), Err(CliError::Input(_))));
        assert!(matches!(parse_grid("0:x:2,0:1:2,0:1:2"), Err(CliError::Input(_))));
    }

    #[test]
    fn points_and_floats() {
        let p = parse_points("# header\n0, 1/2, -3\n\n1e-1,0,0 # tail\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].approx(), [0.0, 0.5, -3.0]);
        assert!(parse_points("1,2\n").is_err());
        assert_eq!(parse_floats::<2>("--c", "1, -2").unwrap(), [1.0, -2.0]);
        assert!(parse_floats::<2>("--c", "1").is_err());
        assert!(parse_floats::<1>("--c", "NaN").unwrap()[0].is_nan());
    }
}
