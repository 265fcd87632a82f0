//! Hostname reduction to the third-level-domain hierarchy of a national
//! country-code TLD.
//!
//! A [`SuffixPolicy`] names the ccTLD and the second-level domains (SLDs)
//! registered beneath it. [`parse_domain_key`] reduces a URL to the
//! registrable unit under one of those SLDs, e.g. `http://www.ox.ac.uk/about`
//! becomes `ox.ac.uk` under `ac.uk`.
//!
//! ```
//! use chronoscope::domain::{parse_domain_key, SuffixPolicy};
//!
//! let policy = SuffixPolicy::uk_default();
//! let key = parse_domain_key("http://www.ox.ac.uk/about", &policy).unwrap();
//! assert_eq!(key.third_level(), "ox.ac.uk");
//! assert_eq!(key.sld(), "ac.uk");
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Label returned by [`classify_sld`] for domains outside the registered set.
pub const UNREGISTERED_SLD: &str = "other";

/// SLDs shipped with [`SuffixPolicy::uk_default`].
pub const UK_DEFAULT_SLDS: [&str; 4] = ["ac.uk", "co.uk", "gov.uk", "org.uk"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("ccTLD label is empty or not a single lowercase ASCII label: {0:?}")]
    InvalidCctld(String),
    #[error("SLD {sld:?} is not of the form <label>.{cctld}")]
    ForeignSld { sld: String, cctld: String },
    #[error("duplicate SLD {0:?}")]
    DuplicateSld(String),
    #[error("policy registers no SLDs")]
    Empty,
    #[error("line {line}: unrecognised directive {text:?}")]
    BadDirective { line: usize, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("malformed URL {url:?}: {reason}")]
    MalformedUrl { url: String, reason: &'static str },
    #[error("host {host:?} is outside the .{cctld} ccTLD")]
    OutOfScopeTld { host: String, cctld: String },
    #[error("host {host:?} is under unregistered SLD {sld:?}")]
    UnknownSld { host: String, sld: String },
}

/// What to do with hosts whose SLD is not registered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownSldHandling {
    #[default]
    Reject,
    /// Treat `name.<cctld>` as the registrable unit and classify it as
    /// [`UNREGISTERED_SLD`].
    TreatAsTwoLevel,
}

impl FromStr for UnknownSldHandling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reject" => Ok(Self::Reject),
            "treat-as-2-level" | "two-level" => Ok(Self::TreatAsTwoLevel),
            other => Err(format!("unknown SLD handling {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixPolicy {
    cctld: String,
    slds: BTreeSet<String>,
    unknown: UnknownSldHandling,
}

impl SuffixPolicy {
    pub fn new<I, S>(cctld: &str, slds: I, unknown: UnknownSldHandling) -> Result<Self, PolicyError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cctld = cctld.trim().trim_start_matches('.').to_ascii_lowercase();
        if cctld.is_empty() || !cctld.bytes().all(is_label_byte) {
            return Err(PolicyError::InvalidCctld(cctld));
        }
        let suffix = format!(".{cctld}");
        let mut set = BTreeSet::new();
        for sld in slds {
            let sld = sld.as_ref().trim().trim_start_matches('.').to_ascii_lowercase();
            let head = sld.strip_suffix(&suffix);
            let valid = matches!(head, Some(h) if !h.is_empty() && h.bytes().all(is_label_byte));
            if !valid {
                return Err(PolicyError::ForeignSld { sld, cctld });
            }
            if !set.insert(sld.clone()) {
                return Err(PolicyError::DuplicateSld(sld));
            }
        }
        if set.is_empty() {
            return Err(PolicyError::Empty);
        }
        Ok(Self { cctld, slds: set, unknown })
    }

    /// The `.uk` policy with `ac.uk`, `co.uk`, `gov.uk` and `org.uk`.
    pub fn uk_default() -> Self {
        Self::new("uk", UK_DEFAULT_SLDS, UnknownSldHandling::Reject).expect("built-in policy is valid")
    }

    /// Parses a policy file: `#` starts a comment, the first remaining line
    /// is the ccTLD and every following line is one SLD. A line of the form
    /// `!unknown-sld = treat-as-2-level` switches the unknown-SLD handling.
    pub fn parse(text: &str) -> Result<Self, PolicyError> {
        let mut cctld = None;
        let mut slds = Vec::new();
        let mut unknown = UnknownSldHandling::Reject;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(directive) = line.strip_prefix('!') {
                let bad = || PolicyError::BadDirective { line: idx + 1, text: line.to_string() };
                let (key, value) = directive.split_once('=').ok_or_else(bad)?;
                if key.trim() != "unknown-sld" {
                    return Err(bad());
                }
                unknown = value.trim().parse().map_err(|_| bad())?;
                continue;
            }
            if cctld.is_none() {
                cctld = Some(line.to_string());
            } else {
                slds.push(line.to_string());
            }
        }
        let cctld = cctld.ok_or_else(|| PolicyError::InvalidCctld(String::new()))?;
        Self::new(&cctld, slds, unknown)
    }

    pub fn with_unknown_sld(mut self, unknown: UnknownSldHandling) -> Self {
        self.unknown = unknown;
        self
    }

    pub fn cctld(&self) -> &str {
        &self.cctld
    }

    pub fn registered_slds(&self) -> &BTreeSet<String> {
        &self.slds
    }

    pub fn unknown_sld_handling(&self) -> UnknownSldHandling {
        self.unknown
    }

    pub fn is_registered(&self, sld: &str) -> bool {
        self.slds.contains(sld)
    }

    /// SLD row for a bare third-level-domain name, [`UNREGISTERED_SLD`] when
    /// the name sits under no registered SLD.
    pub fn sld_of_name<'a>(&'a self, name: &str) -> &'a str {
        let mut rest = name;
        while let Some((_, tail)) = rest.split_once('.') {
            if let Some(sld) = self.slds.get(tail) {
                return sld;
            }
            rest = tail;
        }
        UNREGISTERED_SLD
    }

    /// Reduces an already-normalized hostname (lowercase, no port, no
    /// trailing dot) to `(third_level, sld)` slices of the input.
    pub(crate) fn split_host<'h>(&self, host: &'h str) -> Result<(&'h str, &'h str), DomainError> {
        let host = host.strip_prefix("www.").unwrap_or(host);
        let mut labels = host.rsplitn(4, '.');
        let tld = labels.next().unwrap_or("");
        if tld != self.cctld {
            return Err(DomainError::OutOfScopeTld { host: host.to_string(), cctld: self.cctld.clone() });
        }
        let second = labels
            .next()
            .ok_or(DomainError::MalformedUrl { url: host.to_string(), reason: "host is the bare ccTLD" })?;
        let sld_len = second.len() + 1 + tld.len();
        let sld = &host[host.len() - sld_len..];
        if self.slds.contains(sld) {
            let third = labels
                .next()
                .ok_or(DomainError::MalformedUrl { url: host.to_string(), reason: "host is a bare registered SLD" })?;
            let len = third.len() + 1 + sld_len;
            Ok((&host[host.len() - len..], sld))
        } else {
            match self.unknown {
                UnknownSldHandling::Reject => {
                    Err(DomainError::UnknownSld { host: host.to_string(), sld: sld.to_string() })
                }
                UnknownSldHandling::TreatAsTwoLevel => Ok((sld, sld)),
            }
        }
    }
}

impl Default for SuffixPolicy {
    fn default() -> Self {
        Self::uk_default()
    }
}

fn is_label_byte(b: u8) -> bool {
    b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_'
}

/// A hostname reduced to its ccTLD, SLD and third-level domain.
///
/// Under [`UnknownSldHandling::TreatAsTwoLevel`] an unregistered host keeps
/// its two-label suffix in both `sld` and `third_level`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DomainKey {
    tld: String,
    sld: String,
    third_level: String,
}

impl DomainKey {
    pub fn tld(&self) -> &str {
        &self.tld
    }

    pub fn sld(&self) -> &str {
        &self.sld
    }

    pub fn third_level(&self) -> &str {
        &self.third_level
    }

    pub fn into_third_level(self) -> String {
        self.third_level
    }
}

impl fmt::Display for DomainKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.third_level)
    }
}

/// Extracts the lowercase hostname of an absolute URL.
pub(crate) fn normalized_host(url: &str) -> Result<String, DomainError> {
    let malformed = |reason| DomainError::MalformedUrl { url: url.to_string(), reason };
    // IDNA would quietly turn a non-ASCII host into punycode.
    if let Some((_, rest)) = url.split_once("://") {
        let end = rest.find(['/', '?', '#', '\\']).unwrap_or(rest.len());
        if !rest[..end].is_ascii() {
            return Err(malformed("non-ASCII hostname"));
        }
    }
    let parsed = url::Url::parse(url).map_err(|_| malformed("not an absolute URL"))?;
    let host = match parsed.host() {
        Some(url::Host::Domain(host)) => host,
        Some(_) => return Err(malformed("IP address host")),
        None => return Err(malformed("no hostname")),
    };
    let mut host = host.to_ascii_lowercase();
    if host.ends_with('.') {
        host.pop();
    }
    if host.is_empty() || host.split('.').any(|label| label.is_empty() || !label.bytes().all(is_label_byte)) {
        return Err(malformed("invalid hostname label"));
    }
    Ok(host)
}

/// Parses an absolute URL into its [`DomainKey`].
///
/// The hostname is lowercased, its port dropped, and one leading `www.`
/// label removed; path, query and fragment are ignored.
pub fn parse_domain_key(url: &str, policy: &SuffixPolicy) -> Result<DomainKey, DomainError> {
    let host = normalized_host(url)?;
    let (third, sld) = policy.split_host(&host)?;
    Ok(DomainKey { tld: policy.cctld.clone(), sld: sld.to_string(), third_level: third.to_string() })
}

/// Registered SLD of a key, or [`UNREGISTERED_SLD`].
pub fn classify_sld<'a>(key: &DomainKey, policy: &'a SuffixPolicy) -> &'a str {
    policy.slds.get(key.sld()).map(String::as_str).unwrap_or(UNREGISTERED_SLD)
}
