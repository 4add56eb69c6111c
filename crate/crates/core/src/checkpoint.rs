//! `SDSFORGE-CKPT v1` plain-text checkpoints.
//!
//! ```text
//! SDSFORGE-CKPT v1
//! ARRAY <name> <ndim> <dims...>
//! <values, 17 significant digits, space separated>
//! ...
//! END
//! ```
//! Arrays appear in lexicographic name order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::params::Params;

pub const MAGIC: &str = "SDSFORGE-CKPT v1";

pub fn to_string(params: &Params) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    for (name, t) in params.iter() {
        write!(out, "ARRAY {name} {}", t.ndim()).unwrap();
        for d in t.shape() {
            write!(out, " {d}").unwrap();
        }
        out.push('\n');
        let line: Vec<String> = t.data().iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.push_str("END\n");
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: String::new(),
        line,
        msg: msg.into(),
    }
}

pub fn parse(text: &str) -> Result<Params> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        Some((n, l)) => {
            return Err(perr(n, format!("expected `{MAGIC}` header, found `{}`", l.trim_end())))
        }
        None => return Err(perr(1, "empty checkpoint")),
    }
    let mut params = Params::new();
    let mut last_name: Option<String> = None;
    loop {
        let (n, line) = lines.next().ok_or_else(|| perr(0, "missing END marker"))?;
        let line = line.trim_end();
        if line == "END" {
            break;
        }
        let mut toks = line.split_whitespace();
        if toks.next() != Some("ARRAY") {
            return Err(perr(n, format!("expected ARRAY or END, found `{line}`")));
        }
        let name = toks.next().ok_or_else(|| perr(n, "ARRAY without name"))?.to_string();
        let ndim: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(n, "bad ndim"))?;
        let dims: Vec<usize> = toks
            .map(|t| t.parse().map_err(|_| perr(n, format!("bad dimension `{t}`"))))
            .collect::<Result<_>>()?;
        if dims.len() != ndim {
            return Err(perr(n, format!("ndim {ndim} but {} dims listed", dims.len())));
        }
        if let Some(prev) = &last_name {
            if *prev >= name {
                return Err(perr(n, format!("array `{name}` out of lexicographic order")));
            }
        }
        let (dn, data_line) = lines.next().ok_or_else(|| perr(n + 1, "missing data line"))?;
        let data: Vec<f64> = data_line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| perr(dn, format!("bad number `{t}`"))))
            .collect::<Result<_>>()?;
        let t = Tensor::new(dims, data).map_err(|e| perr(dn, e.to_string()))?;
        if !t.is_finite() {
            return Err(perr(dn, "non-finite value"));
        }
        params.insert(name.clone(), t);
        last_name = Some(name);
    }
    Ok(params)
}

pub fn save(path: impl AsRef<Path>, params: &Params) -> Result<()> {
    if let Some(dir) = path.as_ref().parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path.as_ref(), to_string(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Params> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    parse(&text).map_err(|e| e.with_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_exact() {
        let mut p = Params::new();
        p.insert("b", Tensor::vector(vec![0.5, -1.0]));
        p.insert("a", Tensor::scalar(0.1));
        let text = to_string(&p);
        let expected = "SDSFORGE-CKPT v1\n\
             ARRAY a 0\n1.0000000000000001e-1\n\
             ARRAY b 1 2\n5.0000000000000000e-1 -1.0000000000000000e0\n\
             END\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn version_mismatch_names_line_one() {
        let err = parse("SDSFORGE-CKPT v2\nEND\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn bad_number_names_its_line() {
        let err = parse("SDSFORGE-CKPT v1\nARRAY a 1 2\n1.0 nope\nEND\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse("SDSFORGE-CKPT v1\nARRAY a 1 3\n1.0 2.0\nEND\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(parse("SDSFORGE-CKPT v1\nARRAY a 0\n1.0\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(values in prop::collection::vec(-1e6f64..1e6, 1..20)) {
            let mut p = Params::new();
            p.insert("x.weight", Tensor::vector(values.clone()));
            p.insert("x.bias", Tensor::scalar(values[0] * 1e-9));
            let back = parse(&to_string(&p)).unwrap();
            prop_assert_eq!(back.hash(), p.hash());
        }
    }
}
