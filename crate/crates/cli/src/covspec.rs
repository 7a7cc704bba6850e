//! The `--covariates` list: `name:kind[=label|label...]`, comma separated.
//!
//! Kinds are `continuous`, `binary` and `categorical`. Labels left out are
//! read from the data, sorted.

use covadj_core::dataset::{distinct_values, ColumnSchema, CovariateKind};

use crate::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KindDecl {
    Continuous,
    Binary(Option<Vec<String>>),
    Categorical(Option<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CovariateDecl {
    pub name: String,
    pub kind: KindDecl,
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

pub fn parse(spec: &str) -> CliResult<Vec<CovariateDecl>> {
    let mut out: Vec<CovariateDecl> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, rest) = item.split_once(':').unwrap_or((item, "continuous"));
        let name = name.trim();
        if name.is_empty() {
            return Err(usage(format!("covariate entry `{item}` has no name")));
        }
        if out.iter().any(|d| d.name == name) {
            return Err(usage(format!("covariate `{name}` listed twice")));
        }
        let (kind, labels) = match rest.split_once('=') {
            Some((k, l)) => (
                k.trim(),
                Some(
                    l.split('|')
                        .map(|s| s.trim().to_string())
                        .collect::<Vec<_>>(),
                ),
            ),
            None => (rest.trim(), None),
        };
        let kind = match (kind, labels) {
            ("continuous", None) => KindDecl::Continuous,
            ("continuous", Some(_)) => {
                return Err(usage(format!(
                    "continuous covariate `{name}` takes no labels"
                )))
            }
            ("binary", l) => KindDecl::Binary(l),
            ("categorical", l) => KindDecl::Categorical(l),
            (other, _) => return Err(usage(format!("unknown kind `{other}` for `{name}`"))),
        };
        out.push(CovariateDecl {
            name: name.to_string(),
            kind,
        });
    }
    if out.is_empty() {
        return Err(usage("no covariates given".into()));
    }
    Ok(out)
}

/// Turns declarations into a load schema, reading missing labels from
/// `data`.
pub fn resolve(decls: &[CovariateDecl], data: &[u8]) -> CliResult<Vec<ColumnSchema>> {
    decls
        .iter()
        .map(|d| {
            let labels = |given: &Option<Vec<String>>| -> CliResult<Vec<String>> {
                match given {
                    Some(l) => Ok(l.clone()),
                    None => Ok(distinct_values(data, &d.name)?),
                }
            };
            let kind = match &d.kind {
                KindDecl::Continuous => CovariateKind::Continuous,
                KindDecl::Binary(given) => {
                    let l = labels(given)?;
                    if l.len() != 2 {
                        return Err(usage(format!(
                            "binary covariate `{}` has {} levels: {}",
                            d.name,
                            l.len(),
                            l.join("|")
                        )));
                    }
                    CovariateKind::binary(l[0].clone(), l[1].clone())?
                }
                KindDecl::Categorical(given) => CovariateKind::categorical(labels(given)?)?,
            };
            Ok(ColumnSchema::new(d.name.clone(), kind))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_kinds() {
        let d =
            parse("age:continuous, sex:binary=M|F,g:categorical=a|b|c,h:categorical,w").unwrap();
        assert_eq!(d.len(), 5);
        assert_eq!(
            d[1].kind,
            KindDecl::Binary(Some(vec!["M".into(), "F".into()]))
        );
        assert_eq!(d[3].kind, KindDecl::Categorical(None));
        assert_eq!(d[4].kind, KindDecl::Continuous);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(parse("").is_err());
        assert!(parse("a:weird").is_err());
        assert!(parse("a,a").is_err());
        assert!(parse(":binary").is_err());
        assert!(parse("a:continuous=x|y").is_err());
    }

    #[test]
    fn infers_labels_from_data() {
        let data = b"t,g,s\nA,z,u\nB,y,v\nA,x,u\n";
        let decls = parse("g:categorical,s:binary").unwrap();
        let schema = resolve(&decls, data).unwrap();
        assert_eq!(schema[0].kind.labels().unwrap(), ["x", "y", "z"]);
        assert_eq!(schema[1].kind.labels().unwrap(), ["u", "v"]);
        assert!(resolve(&parse("g:binary").unwrap(), data).is_err());
    }
}
