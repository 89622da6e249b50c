//! Input row parsing for the stream subcommand.
//!
//! Rows are either a single real (`x`) or a comma-separated pair whose
//! second field is a per-observation bound: a standard deviation `sigma_t`
//! for the finite-variance methods, or a `p`-th moment bound `v_t` when the
//! method runs in `p < 2` mode. Blank lines and lines starting with `#` are
//! ignored.

use heavycs::Observation;

/// What a second input column means, fixed by the method flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondColumn {
    Sigma,
    MomentV,
}

pub fn is_data_row(line: &str) -> bool {
    let s = line.trim();
    !s.is_empty() && !s.starts_with('#')
}

pub fn parse_observation(line: &str, t: u64, second: SecondColumn) -> Result<Observation, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let num = |s: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .map_err(|e| format!("bad number '{s}': {e}"))
    };
    match fields.as_slice() {
        [x] => Ok(Observation::new(t, num(x)?)),
        [x, extra] => {
            let obs = Observation::new(t, num(x)?);
            Ok(match second {
                SecondColumn::Sigma => obs.with_sigma(num(extra)?),
                SecondColumn::MomentV => obs.with_v(num(extra)?),
            })
        }
        other => Err(format!(
            "expected 1 or 2 comma-separated fields, got {}",
            other.len()
        )),
    }
}
