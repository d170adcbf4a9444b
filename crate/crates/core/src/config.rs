//! `key = value` run configurations.
//!
//! One entry per line, `#` starts a comment, later entries override earlier ones.
//! Every accessor names the offending key in its error.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use crate::dyadic::{Cube, Domain};
use crate::error::{Error, Result};
use crate::grid::{ExponentTuple, GridFunction};
use crate::lab::{geometric_grid, height_aligned_gammas};
use crate::sparse::{
    random_sparse, sparse_from_maximal, verify_sparse, CubeFamily, SparseCollection,
};
use crate::weights::{CubeScope, WeightTuple};

#[derive(Debug, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
    read: Mutex<BTreeSet<String>>,
}

impl Clone for RunConfig {
    fn clone(&self) -> Self {
        Self {
            entries: self.entries.clone(),
            read: Mutex::new(self.read.lock().expect("lock").clone()),
        }
    }
}

fn bad(key: &str, message: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("{key}: {message}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            config.entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(config)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Apply a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("override {assignment:?} is not key=value"))
        })?;
        self.entries
            .insert(k.trim().to_string(), v.trim().to_string());
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.read.lock().expect("lock").insert(key.to_string());
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Keys present in the file but never read.
    pub fn unused(&self) -> Vec<String> {
        let read = self.read.lock().expect("lock");
        self.entries
            .keys()
            .filter(|k| !read.contains(*k))
            .cloned()
            .collect()
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| bad(key, format!("cannot parse {v:?}: {e}"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(match self.raw(key) {
            None => default,
            Some(v) => parse_real(v).ok_or_else(|| bad(key, format!("not a number: {v:?}")))?,
        })
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed::<usize>(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parsed::<u64>(key)?.unwrap_or(default))
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    /// Comma-separated reals.
    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|x| parse_real(x).ok_or_else(|| bad(key, format!("not a number: {x:?}"))))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    /// A real grid: `geom:lo:hi:n`, `heights:q:n` or a comma-separated list.
    pub fn grid(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        let Some(v) = self.raw(key) else {
            return Ok(default);
        };
        let parts: Vec<&str> = v.split(':').collect();
        let num = |s: &str| parse_real(s).ok_or_else(|| bad(key, format!("not a number: {s:?}")));
        let count = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| bad(key, format!("not a count: {s:?}")))
        };
        match parts.as_slice() {
            ["geom", lo, hi, n] => Ok(geometric_grid(num(lo)?, num(hi)?, count(n)?)),
            ["heights", q, n] => Ok(height_aligned_gammas(num(q)?, count(n)?)),
            [_] => Ok(self.reals(key)?.expect("present")),
            _ => Err(bad(
                key,
                format!("expected geom:lo:hi:n, heights:q:n or a list, got {v:?}"),
            )),
        }
    }

    pub fn domain(&self) -> Result<Domain> {
        let d = self.usize_or("d", 1)?;
        let l = self.parsed::<u32>("L")?.unwrap_or(6);
        Domain::new(d, l).map_err(|e| bad("d/L", e))
    }

    pub fn scope(&self) -> Result<CubeScope> {
        Ok(self.parsed::<CubeScope>("scope")?.unwrap_or_default())
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("seed", 0)
    }

    /// `seeds` consecutive seeds starting at `seed`.
    pub fn seeds(&self) -> Result<Vec<u64>> {
        let first = self.seed()?;
        let n = self.usize_or("seeds", 1)?;
        Ok((0..n as u64).map(|i| first + i).collect())
    }

    /// `p = 2,2` or `p1 = 2`, `p2 = 2`, ...
    pub fn exponents(&self) -> Result<ExponentTuple> {
        if let Some(v) = self.raw("p") {
            return ExponentTuple::parse(v).map_err(|e| bad("p", e));
        }
        let mut values = Vec::new();
        for j in 1.. {
            let key = format!("p{j}");
            match self.raw(&key) {
                None => break,
                Some(v) => values.push(
                    parse_real(v).ok_or_else(|| bad(&key, format!("not an exponent: {v:?}")))?,
                ),
            }
        }
        if values.is_empty() {
            return Err(bad("p", "missing exponent tuple"));
        }
        ExponentTuple::new(values).map_err(|e| bad("p1..pm", e))
    }

    /// One function from the mini-language (`const:c`, `power:a:center`, `cells:..`,
    /// `random-lognormal:seed:sigma`, `file:path`).
    pub fn function(&self, key: &str, domain: Domain) -> Result<Option<GridFunction>> {
        match self.raw(key) {
            None => Ok(None),
            Some(spec) => GridFunction::from_spec(domain, spec)
                .map(Some)
                .map_err(|e| bad(key, e)),
        }
    }

    /// `{prefix}1, {prefix}2, ...`; a bare `{prefix}` is repeated `m` times.
    pub fn functions(
        &self,
        prefix: &str,
        domain: Domain,
        m: usize,
    ) -> Result<Option<Vec<GridFunction>>> {
        if let Some(f) = self.function(prefix, domain)? {
            return Ok(Some(vec![f; m]));
        }
        let mut out = Vec::new();
        for j in 1..=m {
            let key = format!("{prefix}{j}");
            match self.function(&key, domain)? {
                Some(f) => out.push(f),
                None if out.is_empty() => return Ok(None),
                None => {
                    return Err(bad(
                        &key,
                        format!(
                        "missing; {prefix}1 is given so all of {prefix}1..{prefix}{m} are needed"
                    ),
                    ))
                }
            }
        }
        Ok(Some(out))
    }

    pub fn weights(&self, domain: Domain, m: usize) -> Result<WeightTuple> {
        let ws = self.functions("weight", domain, m)?.unwrap_or_else(|| {
            vec![GridFunction::constant(domain, 1.0).expect("positive constant"); m]
        });
        for (j, w) in ws.iter().enumerate() {
            w.require_weight()
                .map_err(|e| bad(&format!("weight{}", j + 1), e))?;
        }
        WeightTuple::new(ws)
    }

    pub fn cube(&self, key: &str, domain: &Domain) -> Result<Cube> {
        match self.raw(key) {
            None => Ok(domain.root()),
            Some(v) => v.parse::<Cube>().map_err(|e| bad(key, e)),
        }
    }

    /// `sparse = random:count`, `maximal`, `all` or `file:path`, verified at `eta`.
    pub fn sparse(
        &self,
        domain: Domain,
        seed: u64,
        fs: Option<&[GridFunction]>,
    ) -> Result<SparseCollection> {
        let eta = self.f64_or("eta", 0.5)?;
        let spec = self.string_or("sparse", "random:8");
        let wrap = |e: Error| match e {
            e @ Error::NotEtaSparse { .. } => e,
            e => bad("sparse", e),
        };
        if let Some(count) = spec.strip_prefix("random:") {
            let count = count
                .trim()
                .parse::<usize>()
                .map_err(|_| bad("sparse", format!("bad count in {spec:?}")))?;
            return random_sparse(domain, seed, eta, count).map_err(wrap);
        }
        if let Some(path) = spec.strip_prefix("file:") {
            let text = std::fs::read_to_string(path.trim()).map_err(|e| bad("sparse", e))?;
            let family = CubeFamily::parse(domain, &text).map_err(wrap)?;
            return verify_sparse(&family, eta).map_err(wrap);
        }
        match spec.as_str() {
            "maximal" => {
                let fs = fs.ok_or_else(|| bad("sparse", "maximal needs input functions"))?;
                sparse_from_maximal(fs, eta).map_err(wrap)
            }
            "root" => verify_sparse(
                &CubeFamily::from_nodes(domain, [crate::dyadic::Node::ROOT])?,
                eta,
            )
            .map_err(wrap),
            _ => Err(bad(
                "sparse",
                format!("expected random:count, maximal, root or file:path, got {spec:?}"),
            )),
        }
    }
}

/// Reals with `inf` accepted.
pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "infinity" | "+inf" => Some(f64::INFINITY),
        t => t.parse::<f64>().ok().filter(|x| !x.is_nan()),
    }
}
