//! Optimization rule descriptors and the rule library.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::ContextError;

const BUILTIN_RULES: &str = include_str!("../../data/rules.toml");
const GCC_FLAGS: &str = include_str!("../../data/gcc_flags.txt");

/// Optimization flags the host compiler family knows about.
pub fn known_flags() -> &'static BTreeSet<String> {
    static FLAGS: OnceLock<BTreeSet<String>> = OnceLock::new();
    FLAGS.get_or_init(|| {
        GCC_FLAGS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_whitespace().next())
            .map(String::from)
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDescriptor {
    pub flag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// Other spellings of the flag that the registry also answers to.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    /// One bullet per non-empty line.
    pub description: String,
    #[serde(rename = "example")]
    pub example_source: String,
    pub hint: String,
}

impl RuleDescriptor {
    pub fn bullets(&self) -> impl Iterator<Item = &str> {
        self.description
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
    }

    pub fn validate(&self) -> Result<(), ContextError> {
        let known = known_flags();
        if !known.contains(&self.flag) && !self.aliases.iter().any(|a| known.contains(a)) {
            return Err(ContextError::UnknownFlag(self.flag.clone()));
        }
        for (name, value) in [
            ("description", &self.description),
            ("example", &self.example_source),
            ("hint", &self.hint),
        ] {
            if value.trim().is_empty() {
                return Err(ContextError::InvalidRule {
                    flag: self.flag.clone(),
                    reason: format!("{name} is empty"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct RuleFile {
    #[serde(default)]
    rule: Vec<RuleDescriptor>,
}

/// Rules keyed by flag.
#[derive(Debug, Clone, Default)]
pub struct RuleRegistry {
    rules: BTreeMap<String, RuleDescriptor>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn flag_line(text: &str, flag: &str, nth: usize) -> Option<usize> {
    let re = regex::Regex::new(&format!(r#"(?m)^\s*flag\s*=\s*"{}"\s*$"#, regex::escape(flag))).ok()?;
    let start = re.find_iter(text).nth(nth)?.start();
    Some(line_of(text, start))
}

/// Parses a rule file. Duplicate flags within one file are an error.
pub fn parse_rules(text: &str) -> Result<Vec<RuleDescriptor>, ContextError> {
    let file: RuleFile = toml::from_str(text).map_err(|e| ContextError::ParseFailure {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut seen = BTreeSet::new();
    for r in &file.rule {
        if !seen.insert(r.flag.clone()) {
            return Err(ContextError::ParseFailure {
                line: flag_line(text, &r.flag, 1),
                message: format!("duplicate rule for {}", r.flag),
            });
        }
        r.validate()?;
    }
    Ok(file.rule)
}

impl RuleRegistry {
    /// The shipped rules.
    pub fn builtin() -> Self {
        let mut reg = RuleRegistry::default();
        for r in parse_rules(BUILTIN_RULES).expect("shipped rules are valid") {
            reg.rules.insert(r.flag.clone(), r);
        }
        reg
    }

    /// Adds rules, replacing any existing rule with the same flag.
    pub fn extend(&mut self, rules: Vec<RuleDescriptor>) {
        for r in rules {
            self.rules.insert(r.flag.clone(), r);
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Looks a rule up by flag or alias.
    pub fn get(&self, flag: &str) -> Option<&RuleDescriptor> {
        self.rules
            .get(flag)
            .or_else(|| self.rules.values().find(|r| r.aliases.iter().any(|a| a == flag)))
    }

    pub fn flags(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    pub fn rules(&self) -> impl Iterator<Item = &RuleDescriptor> {
        self.rules.values()
    }
}

/// The built-in rules plus those in `path`.
pub fn load_rules(path: &Path) -> Result<RuleRegistry, ContextError> {
    let text = std::fs::read_to_string(path).map_err(|source| ContextError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reg = RuleRegistry::builtin();
    reg.extend(parse_rules(&text)?);
    Ok(reg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_registry_has_five_rules() {
        let reg = RuleRegistry::builtin();
        assert_eq!(reg.len(), 5);
        assert!(reg.get("-fipa-pure-const").is_some());
        assert_eq!(reg.get("-fipa-pure-const").unwrap().flag, "-fipa-pure-count");
    }

    #[test]
    fn duplicate_flag_reports_line() {
        let text = "[[rule]]\nflag = \"-ftree-ter\"\ndescription = \"d\"\nexample = \"e\"\nhint = \"h\"\n\n[[rule]]\nflag = \"-ftree-ter\"\ndescription = \"d\"\nexample = \"e\"\nhint = \"h\"\n";
        match parse_rules(text) {
            Err(ContextError::ParseFailure { line, .. }) => assert_eq!(line, Some(8)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse_rules("[[rule]]\nflag = \"-ftree-ter\"\ndescription = \n") {
            Err(ContextError::ParseFailure { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_flag_and_empty_field() {
        let unknown = "[[rule]]\nflag = \"-fmake-it-fast\"\ndescription = \"d\"\nexample = \"e\"\nhint = \"h\"\n";
        assert!(matches!(parse_rules(unknown), Err(ContextError::UnknownFlag(_))));
        let empty = "[[rule]]\nflag = \"-ftree-ter\"\ndescription = \"d\"\nexample = \"e\"\nhint = \"  \"\n";
        assert!(matches!(parse_rules(empty), Err(ContextError::InvalidRule { .. })));
    }
}
