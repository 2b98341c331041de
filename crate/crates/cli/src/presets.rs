//! Short textual forms for systems and observables, so experiments don't
//! require a config file. Anything starting with `{` is parsed as the JSON
//! schema instead.

use cubelab_core::dynamics::{Observable, Point, SystemSpec};

use crate::config::ConfigError;

const SQRT2M1: f64 = std::f64::consts::SQRT_2 - 1.0;

/// `rotation[:alpha]`, `doubling[:seed]`, `skew[:alpha]`,
/// `product[:alpha[:theta]]`, `external:<path>`, or inline JSON.
pub fn parse_system(s: &str) -> Result<SystemSpec, ConfigError> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s)
            .map_err(|e| ConfigError::Invalid(format!("system JSON: {e}")));
    }
    let mut parts = s.split(':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let float = |v: &str, what: &str| -> Result<f64, ConfigError> {
        v.parse::<f64>()
            .map_err(|_| ConfigError::Invalid(format!("bad {what} `{v}`")))
    };
    match head {
        "rotation" => {
            let alpha = rest.first().map(|v| float(v, "alpha")).transpose()?;
            Ok(SystemSpec::rotation(alpha.unwrap_or(SQRT2M1)))
        }
        "doubling" => {
            let seed = match rest.first() {
                Some(v) => v
                    .parse::<u64>()
                    .map_err(|_| ConfigError::Invalid(format!("bad seed `{v}`")))?,
                None => 0,
            };
            Ok(SystemSpec::doubling(seed))
        }
        "skew" => {
            let alpha = rest.first().map(|v| float(v, "alpha")).transpose()?;
            Ok(SystemSpec::skew_product(alpha.unwrap_or(SQRT2M1)))
        }
        "product" => {
            let alpha = rest
                .first()
                .map(|v| float(v, "alpha"))
                .transpose()?
                .unwrap_or(SQRT2M1);
            let theta = rest
                .get(1)
                .map(|v| float(v, "theta"))
                .transpose()?
                .unwrap_or(0.3);
            Ok(SystemSpec::product_rotation(alpha, theta))
        }
        "external" => match rest.first() {
            Some(path) if !path.is_empty() => Ok(SystemSpec::external(*path)),
            _ => Err(ConfigError::Invalid("external needs a path".into())),
        },
        other => Err(ConfigError::Invalid(format!("unknown system `{other}`"))),
    }
}

/// `one`, `e:k[:l]` (the character `e^{2 pi i (kx + ly)}`), `cos:k`,
/// `ind:a:b`, or inline JSON; append `!mz` to subtract the mean.
pub fn parse_observable(s: &str) -> Result<Observable, ConfigError> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s)
            .map_err(|e| ConfigError::Invalid(format!("observable JSON: {e}")));
    }
    let (body, mean_zero) = match s.strip_suffix("!mz") {
        Some(b) => (b, true),
        None => (s, false),
    };
    let mut parts = body.split(':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let int = |v: &str| -> Result<i32, ConfigError> {
        v.parse::<i32>()
            .map_err(|_| ConfigError::Invalid(format!("bad mode `{v}`")))
    };
    let obs = match head {
        "one" => Observable::one(),
        "e" => {
            let k = int(rest.first().copied().unwrap_or("1"))?;
            match rest.get(1) {
                None => Observable::character(k),
                Some(l) => {
                    let l = int(l)?;
                    if k == 0 {
                        Observable::character_y(l)
                    } else {
                        let mut o = Observable::character(k);
                        o.terms[0].l = l;
                        o
                    }
                }
            }
        }
        "cos" => Observable::cosine(int(rest.first().copied().unwrap_or("1"))?),
        "ind" => {
            let a = rest
                .first()
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| ConfigError::Invalid("ind needs `ind:a:b`".into()))?;
            let b = rest
                .get(1)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| ConfigError::Invalid("ind needs `ind:a:b`".into()))?;
            Observable::indicator(a, b)
        }
        other => return Err(ConfigError::Invalid(format!("unknown observable `{other}`"))),
    };
    Ok(obs.with_mean_zero(mean_zero))
}

/// `"x"` or `"x,y"`.
pub fn parse_point(s: &str) -> Result<Point, ConfigError> {
    let coords: Result<Vec<f64>, _> = s.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|_| ConfigError::Invalid(format!("bad point `{s}`")))?;
    Point::try_from(coords).map_err(ConfigError::Invalid)
}

/// Comma list (`64,128,256`) or a power-of-two range (`2^6..2^12`).
pub fn parse_horizons(s: &str) -> Result<Vec<usize>, ConfigError> {
    let s = s.trim();
    if let Some(body) = s.strip_prefix("2^") {
        if let Some((lo, hi)) = body.split_once("..") {
            let lo: u32 = lo
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("bad horizon spec `{s}`")))?;
            let hi: u32 = hi
                .trim_start_matches('=')
                .trim_start_matches("2^")
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("bad horizon spec `{s}`")))?;
            if lo > hi || hi >= usize::BITS {
                return Err(ConfigError::Invalid(format!("bad horizon range `{s}`")));
            }
            return Ok((lo..=hi).map(|e| 1usize << e).collect());
        }
    }
    let list: Result<Vec<usize>, _> = s.split(',').map(|v| v.trim().parse::<usize>()).collect();
    list.map_err(|_| ConfigError::Invalid(format!("bad horizon list `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cubelab_core::dynamics::SystemKind;

    #[test]
    fn system_presets() {
        assert_eq!(parse_system("rotation:0.25").unwrap(), SystemSpec::rotation(0.25));
        assert_eq!(parse_system("doubling:7").unwrap(), SystemSpec::doubling(7));
        assert_eq!(
            parse_system("{\"kind\":\"Doubling\",\"seed\":3}").unwrap().kind,
            SystemKind::Doubling
        );
        assert!(parse_system("nope").is_err());
    }

    #[test]
    fn observable_presets() {
        assert_eq!(parse_observable("one").unwrap(), Observable::one());
        assert_eq!(
            parse_observable("cos:2!mz").unwrap(),
            Observable::cosine(2).with_mean_zero(true)
        );
        assert_eq!(parse_observable("e:0:1").unwrap(), Observable::character_y(1));
        assert_eq!(
            parse_observable("ind:0.25:0.75").unwrap(),
            Observable::indicator(0.25, 0.75)
        );
    }

    #[test]
    fn horizon_specs() {
        assert_eq!(parse_horizons("2^3..2^5").unwrap(), vec![8, 16, 32]);
        assert_eq!(parse_horizons("3,9,27").unwrap(), vec![3, 9, 27]);
        assert!(parse_horizons("x").is_err());
    }
}
