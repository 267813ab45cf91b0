//! `MLPW1` weight files.
//!
//! ```text
//! MLPW1
//! 6 20 20 1                 layer sizes
//! <input mins>              one per input
//! <input maxs>
//! <output min>
//! <output max>
//! <bias> <w_1> … <w_n>      one line per neuron, layer by layer
//! ```
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so a reload reproduces outputs bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, Mlp, MlpSpec, Scaler};
use crate::{Error, Result};

pub const MAGIC: &str = "MLPW1";

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").unwrap();
    }
    s
}

impl Mlp {
    pub fn to_mlpw_string(&self) -> Result<String> {
        if self.spec.hidden_activation() != Activation::Tanh {
            return Err(Error::Config("MLPW1 stores tanh networks only".into()));
        }
        let sizes = self.spec.layer_sizes();
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        let sizes_str: Vec<String> = sizes.iter().map(usize::to_string).collect();
        writeln!(out, "{}", sizes_str.join(" ")).unwrap();
        writeln!(out, "{}", join(self.input_scaler.mins())).unwrap();
        writeln!(out, "{}", join(self.input_scaler.maxs())).unwrap();
        writeln!(out, "{}", join(self.output_scaler.mins())).unwrap();
        writeln!(out, "{}", join(self.output_scaler.maxs())).unwrap();
        let mut offset = 0;
        for w in sizes.windows(2) {
            for _ in 0..w[1] {
                writeln!(out, "{}", join(&self.params[offset..offset + w[0] + 1])).unwrap();
                offset += w[0] + 1;
            }
        }
        Ok(out)
    }

    pub fn from_mlpw_str(text: &str, source: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| {
                Error::format(
                    source,
                    text.lines().count() + 1,
                    None,
                    format!("truncated file: expected {what}"),
                )
            })
        };

        let (n, magic) = next("magic")?;
        if magic.trim() != MAGIC {
            return Err(Error::format(
                source,
                n,
                None,
                format!("expected header {MAGIC}, found {:?}", magic.trim()),
            ));
        }

        let (n, line) = next("layer sizes")?;
        let sizes = parse_numbers::<usize>(line, n, source)?;
        let spec = MlpSpec::new(sizes).map_err(|e| Error::format(source, n, None, e.to_string()))?;
        let inputs = spec.inputs();

        let mut row = |what: &str, len: usize| -> Result<Vec<f64>> {
            let (n, line) = next(what)?;
            let v = parse_numbers::<f64>(line, n, source)?;
            if v.len() != len {
                return Err(Error::format(
                    source,
                    n,
                    None,
                    format!("{what}: expected {len} values, found {}", v.len()),
                ));
            }
            Ok(v)
        };
        let in_min = row("input minimums", inputs)?;
        let in_max = row("input maximums", inputs)?;
        let out_min = row("output minimum", 1)?;
        let out_max = row("output maximum", 1)?;

        let mut params = Vec::with_capacity(spec.num_params());
        for w in spec.layer_sizes().windows(2) {
            for _ in 0..w[1] {
                params.extend(row("neuron weights", w[0] + 1)?);
            }
        }
        if let Some((n, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::format(
                source,
                n,
                None,
                format!("unexpected trailing data {:?}", extra.trim()),
            ));
        }

        let input = Scaler::new(in_min, in_max).map_err(|e| Error::format(source, 3, None, e.to_string()))?;
        let output = Scaler::new(out_min, out_max).map_err(|e| Error::format(source, 5, None, e.to_string()))?;
        Mlp::from_parts(spec, params, input, output)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_mlpw_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_mlpw_str(&text, path)
    }
}

fn parse_numbers<T: std::str::FromStr>(line: &str, n: usize, source: &Path) -> Result<Vec<T>> {
    let mut col = 1;
    let mut out = Vec::new();
    for tok in line.split(' ') {
        if !tok.is_empty() {
            out.push(
                tok.parse()
                    .map_err(|_| Error::format(source, n, Some(col), format!("cannot parse {tok:?}")))?,
            );
        }
        col += tok.len() + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{lm_train, TrainOptions};

    fn trained() -> Mlp {
        let xs: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 10.0, (i % 7) as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x[0] - x[1]).tanh() * 0.3 + 0.2).collect();
        let mut net = Mlp::init(MlpSpec::new(vec![2, 5, 4, 1]).unwrap(), 17);
        net.fit_scalers(&xs, &ys).unwrap();
        let opts = TrainOptions {
            max_iter: 10,
            ..Default::default()
        };
        lm_train(&mut net, &xs, &ys, &opts).unwrap();
        net
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let net = trained();
        let text = net.to_mlpw_string().unwrap();
        let back = Mlp::from_mlpw_str(&text, Path::new("mem")).unwrap();
        assert_eq!(back, net);
        for x in [[0.1, 3.0], [4.4, 0.0], [-7.0, 12.5]] {
            assert_eq!(back.forward(&x).unwrap().to_bits(), net.forward(&x).unwrap().to_bits());
        }
        assert_eq!(back.to_mlpw_string().unwrap(), text);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.mlpw");
        let net = trained();
        net.save(&path).unwrap();
        assert_eq!(Mlp::load(&path).unwrap(), net);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = trained().to_mlpw_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let cut = lines[..lines.len() - 2].join("\n");
        let err = Mlp::from_mlpw_str(&cut, Path::new("t.mlpw")).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let text = trained().to_mlpw_string().unwrap().replacen("MLPW1", "MLPW2", 1);
        let err = Mlp::from_mlpw_str(&text, Path::new("v.mlpw")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }), "{err}");
    }

    #[test]
    fn bad_token_reports_line_and_column() {
        let text = trained().to_mlpw_string().unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        lines[6] = format!("0.5 oops {}", lines[6]);
        let err = Mlp::from_mlpw_str(&lines.join("\n"), Path::new("b.mlpw")).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Format {
                    line: 7,
                    col: Some(5),
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn wrong_width_is_rejected() {
        let text = trained().to_mlpw_string().unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        lines[2].push_str(" 1.0");
        let err = Mlp::from_mlpw_str(&lines.join("\n"), Path::new("w.mlpw")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err}");
    }
}
