//! Attribution of hosts to the configured agency domains.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::url_keys::{host_has_suffix, normalize_host, registrable_domain};

/// Agency domains of the default study set.
pub const DEFAULT_AGENCIES: &[&str] = &[
    "blm.gov",
    "cdc.gov",
    "doe.gov",
    "doi.gov",
    "dot.gov",
    "energy.gov",
    "epa.gov",
    "fed.us",
    "federalregister.gov",
    "fema.gov",
    "ferc.gov",
    "fws.gov",
    "gao.gov",
    "globalchange.gov",
    "gsa.gov",
    "hhs.gov",
    "justice.gov",
    "nasa.gov",
    "nih.gov",
    "noaa.gov",
    "nps.gov",
    "nsf.gov",
    "osha.gov",
    "osmre.gov",
    "usda.gov",
    "usgs.gov",
    "whitehouse.gov",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgencyTable {
    pub agencies: Vec<String>,
    /// Registrable domain → agency domain.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

impl Default for AgencyTable {
    fn default() -> Self {
        AgencyTable {
            agencies: DEFAULT_AGENCIES.iter().map(|s| s.to_string()).collect(),
            aliases: BTreeMap::new(),
        }
    }
}

impl AgencyTable {
    /// Agency for `host`: the longest configured domain the host falls under,
    /// then the alias table, then the host's registrable domain.
    pub fn attribute(&self, host: &str) -> String {
        let host = normalize_host(host);
        if let Some(best) = self
            .agencies
            .iter()
            .filter(|a| host_has_suffix(&host, a))
            .max_by_key(|a| a.len())
        {
            return best.clone();
        }
        let reg = registrable_domain(&host);
        self.aliases.get(&reg).cloned().unwrap_or(reg)
    }

    pub fn is_configured(&self, agency: &str) -> bool {
        self.agencies.iter().any(|a| a == agency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attribution() {
        let t = AgencyTable::default();
        assert_eq!(t.attribute("www.epa.gov"), "epa.gov");
        assert_eq!(t.attribute("techtransfer.osmre.gov"), "osmre.gov");
        assert_eq!(t.attribute("www.fs.fed.us"), "fed.us");
        assert_eq!(t.attribute("fire.ak.blm.gov"), "blm.gov");
        assert_eq!(t.attribute("www.doe.gov"), "doe.gov");
        assert_eq!(t.attribute("www.energy.gov"), "energy.gov");
        assert_eq!(t.attribute("notepa.gov"), "notepa.gov");
        let mut aliased = t.clone();
        aliased.aliases.insert("osha-slc.gov".into(), "osha.gov".into());
        assert_eq!(aliased.attribute("www.osha-slc.gov"), "osha.gov");
    }
}
