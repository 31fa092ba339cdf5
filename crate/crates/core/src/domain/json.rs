//! JSON domain descriptions.
//!
//! ```text
//! {"disk": {"c": [1, 0], "r": 0.25}}
//! {"halfplane": {"n": [0, 1], "offset": 0}}
//! {"polygon": {"vertices": [[0, 0], [1, 0], [0, 1]]}}
//! {"dogbone": {"eps": 0.1}}
//! {"op": "union" | "intersection" | "difference", "args": [ ... ]}
//! ```

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::{DogboneSpec, PlanarDomain, Region};
use crate::error::{Error, Result};

fn err(path: &str, message: impl Into<String>) -> Error {
    Error::DomainSpec { path: path.to_string(), message: message.into() }
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| err(path, "expected a finite number"))
}

fn complex(v: &Value, path: &str) -> Result<Complex64> {
    match v.as_array() {
        Some(a) if a.len() == 2 => Ok(Complex64::new(number(&a[0], &format!("{path}[0]"))?, number(&a[1], &format!("{path}[1]"))?)),
        _ => Err(err(path, "expected a [re, im] pair")),
    }
}

fn object<'a>(v: &'a Value, path: &str, keys: &[&str]) -> Result<&'a Map<String, Value>> {
    let m = v.as_object().ok_or_else(|| err(path, "expected an object"))?;
    if let Some(k) = m.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(err(path, format!("unexpected key \"{k}\"")));
    }
    Ok(m)
}

fn field<'a>(m: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| err(path, format!("missing key \"{key}\"")))
}

fn parse(v: &Value, path: &str) -> Result<Region> {
    let m = v.as_object().ok_or_else(|| err(path, "expected an object"))?;
    if m.contains_key("op") {
        let m = object(v, path, &["op", "args"])?;
        let op = field(m, "op", path)?.as_str().ok_or_else(|| err(&format!("{path}.op"), "expected a string"))?;
        let args = field(m, "args", path)?
            .as_array()
            .ok_or_else(|| err(&format!("{path}.args"), "expected an array"))?
            .iter()
            .enumerate()
            .map(|(i, a)| parse(a, &format!("{path}.args[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let need = if op == "difference" { 2 } else { 1 };
        if args.len() < need {
            return Err(err(&format!("{path}.args"), format!("\"{op}\" needs at least {need} arguments")));
        }
        return match op {
            "union" => Ok(Region::Union(args)),
            "intersection" => Ok(Region::Intersection(args)),
            "difference" => Ok(Region::Difference(args)),
            other => Err(err(&format!("{path}.op"), format!("unknown operation \"{other}\""))),
        };
    }
    if m.len() != 1 {
        return Err(err(path, "expected exactly one primitive key"));
    }
    let (key, body) = m.iter().next().expect("one entry");
    let p = format!("{path}.{key}");
    match key.as_str() {
        "disk" => {
            let b = object(body, &p, &["c", "r"])?;
            let center = complex(field(b, "c", &p)?, &format!("{p}.c"))?;
            let radius = number(field(b, "r", &p)?, &format!("{p}.r"))?;
            if radius <= 0.0 {
                return Err(err(&format!("{p}.r"), "radius must be positive"));
            }
            Ok(Region::Disk { center, radius })
        }
        "halfplane" => {
            let b = object(body, &p, &["n", "offset"])?;
            let n = complex(field(b, "n", &p)?, &format!("{p}.n"))?;
            let offset = match b.get("offset") {
                Some(o) => number(o, &format!("{p}.offset"))?,
                None => 0.0,
            };
            let len = n.norm();
            if len == 0.0 {
                return Err(err(&format!("{p}.n"), "normal must be nonzero"));
            }
            Ok(Region::HalfPlane { normal: n / len, offset: offset / len })
        }
        "polygon" => {
            let b = object(body, &p, &["vertices"])?;
            let vs = field(b, "vertices", &p)?
                .as_array()
                .ok_or_else(|| err(&format!("{p}.vertices"), "expected an array"))?
                .iter()
                .enumerate()
                .map(|(i, v)| complex(v, &format!("{p}.vertices[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Region::Polygon { vertices: vs })
        }
        "dogbone" => {
            let b = object(body, &p, &["eps"])?;
            let eps = number(field(b, "eps", &p)?, &format!("{p}.eps"))?;
            let spec = DogboneSpec::new(eps).map_err(|e| err(&format!("{p}.eps"), e.to_string()))?;
            Ok(spec.domain().root)
        }
        other => Err(err(path, format!("unknown primitive \"{other}\""))),
    }
}

fn pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn to_value(r: &Region) -> Value {
    match r {
        Region::Disk { center, radius } => json!({"disk": {"c": pair(*center), "r": radius}}),
        Region::HalfPlane { normal, offset } => json!({"halfplane": {"n": pair(*normal), "offset": offset}}),
        Region::Polygon { vertices } => {
            json!({"polygon": {"vertices": vertices.iter().map(|v| pair(*v)).collect::<Vec<_>>()}})
        }
        Region::Union(v) => json!({"op": "union", "args": v.iter().map(to_value).collect::<Vec<_>>()}),
        Region::Intersection(v) => {
            json!({"op": "intersection", "args": v.iter().map(to_value).collect::<Vec<_>>()})
        }
        Region::Difference(v) => json!({"op": "difference", "args": v.iter().map(to_value).collect::<Vec<_>>()}),
    }
}

impl PlanarDomain {
    /// Parses a JSON domain description; errors carry a `$`-rooted path.
    pub fn from_json_value(v: &Value) -> Result<Self> {
        let region = parse(v, "$")?;
        Self::from_region(region).map_err(|e| match e {
            Error::InvalidInput(m) => err("$", m),
            other => other,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s)
            .map_err(|e| err(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        Self::from_json_value(&v)
    }

    /// Expanded tree form (named shorthands are not preserved).
    pub fn to_json_value(&self) -> Value {
        to_value(&self.root)
    }
}
