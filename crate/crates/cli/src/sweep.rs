//! `start:stop:step` sweeps with inclusive endpoints; a bare number is a one-point sweep.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep<T> {
    spec: String,
    pub values: Vec<T>,
}

impl<T> Serialize for Sweep<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.spec)
    }
}

impl<T> fmt::Display for Sweep<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec)
    }
}

impl<T: Copy> Sweep<T> {
    pub fn single(&self) -> Option<T> {
        (self.values.len() == 1).then(|| self.values[0])
    }
}

const MAX_POINTS: usize = 1_000_000;

fn fields(s: &str) -> Result<Vec<&str>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.len() {
        1 | 3 => Ok(parts),
        _ => Err(format!("expected a value or start:stop:step, got '{s}'")),
    }
}

impl FromStr for Sweep<f64> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |x: &str| x.parse::<f64>().map_err(|e| format!("'{x}': {e}")).and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("'{x}' is not finite"))
            }
        });
        let parts = fields(s)?;
        let values = if parts.len() == 1 {
            vec![parse(parts[0])?]
        } else {
            let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
            if !(step > 0.0) || stop < start {
                return Err(format!("sweep '{s}' needs step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > MAX_POINTS {
                return Err(format!("sweep '{s}' has more than {MAX_POINTS} points"));
            }
            // rounding keeps 0:4:0.4 from producing 1.2000000000000002
            (0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
        };
        Ok(Self { spec: s.to_string(), values })
    }
}

impl FromStr for Sweep<usize> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |x: &str| x.parse::<usize>().map_err(|e| format!("'{x}': {e}"));
        let parts = fields(s)?;
        let values = if parts.len() == 1 {
            vec![parse(parts[0])?]
        } else {
            let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
            if step == 0 || stop < start {
                return Err(format!("sweep '{s}' needs step > 0 and stop >= start"));
            }
            if (stop - start) / step >= MAX_POINTS {
                return Err(format!("sweep '{s}' has more than {MAX_POINTS} points"));
            }
            (start..=stop).step_by(step).collect()
        };
        Ok(Self { spec: s.to_string(), values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges() {
        let z: Sweep<f64> = "0:4:0.4".parse().unwrap();
        assert_eq!(z.values.len(), 11);
        assert_eq!(z.values[3], 1.2);
        assert_eq!(z.values[10], 4.0);
        let l: Sweep<usize> = "60:160:20".parse().unwrap();
        assert_eq!(l.values, vec![60, 80, 100, 120, 140, 160]);
        assert_eq!("7".parse::<Sweep<usize>>().unwrap().single(), Some(7));
        assert_eq!("5:40:5".parse::<Sweep<f64>>().unwrap().values.len(), 8);
        assert_eq!(serde_json::to_string(&l).unwrap(), "\"60:160:20\"");
    }

    #[test]
    fn rejects_bad_ranges() {
        for bad in ["1:2", "4:0:1", "0:1:0", "a", "0:1:-1", "inf"] {
            assert!(bad.parse::<Sweep<f64>>().is_err(), "{bad}");
        }
        assert!("3:1:1".parse::<Sweep<usize>>().is_err());
        assert!("-1".parse::<Sweep<usize>>().is_err());
    }
}
