//! Domain/region skeleton: the decomposition of space into volume domains and
//! the oriented surface regions separating them.
//!
//! Conventions. Every region carries a unit normal field; for a region between
//! domains n and m with n > m the normal points from n into m. We call m the
//! "toward" side (the normal points into it) and n the "away" side. Traces:
//! the limit taken from the toward side is the one approached along +normal.
//! `sign(n, a)` is + when the normal is outward with respect to domain n,
//! i.e. when n is the away side.
//!
//! Conducting sheets without volume ("screens") are regions whose two
//! geometric sides lie in the same dielectric; they reference their conductor
//! through `screen_conductor` and their total charge follows from the jump of
//! the normal trace instead of a one-sided trace.

use super::MeshError;

#[derive(Debug, Clone, PartialEq)]
pub enum DomainClass {
    /// The unbounded surrounding air domain (relative permittivity 1).
    Air,
    Dielectric {
        eps_r: f64,
    },
    Electrode {
        voltage: f64,
    },
    Floating {
        charge: f64,
    },
}

impl DomainClass {
    pub fn is_conductor(&self) -> bool {
        matches!(self, DomainClass::Electrode { .. } | DomainClass::Floating { .. })
    }

    pub fn eps_r(&self) -> Option<f64> {
        match self {
            DomainClass::Air => Some(1.0),
            DomainClass::Dielectric { eps_r } => Some(*eps_r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub id: usize,
    pub class: DomainClass,
}

#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub id: usize,
    /// The two domains the region separates. Order free; normalized so the
    /// higher id becomes the away side. Equal ids are only valid for screens.
    pub sides: (usize, usize),
    /// Conductor domain when the region is a volume-less conducting sheet.
    pub screen_conductor: Option<usize>,
    /// Mesh indices (into the problem's mesh set) discretizing this region.
    pub meshes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionClass {
    Electrode,
    Floating,
    Dielectric,
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub id: usize,
    pub class: DomainClass,
}

#[derive(Debug, Clone)]
pub struct Region {
    pub id: usize,
    /// Domain the normal points into (the lower id for two-sided regions).
    pub toward: usize,
    /// Domain the normal points away from.
    pub away: usize,
    pub screen: Option<usize>,
    pub meshes: Vec<usize>,
    pub class: RegionClass,
    /// Conductor domain for E/F regions.
    pub conductor: Option<usize>,
    /// Transmission parameter for dielectric-dielectric regions:
    /// (eps_toward + eps_away) / (2 (eps_toward - eps_away)).
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Skeleton {
    domains: Vec<Domain>,
    regions: Vec<Region>,
}

/// Transmission parameter (eps_n + eps_m) / (2 (eps_n - eps_m)), with n the
/// domain the region normal points toward.
pub fn lambda_param(eps_n: f64, eps_m: f64) -> Result<f64, MeshError> {
    if !(eps_n > 0.0) || !(eps_m > 0.0) {
        return Err(MeshError::Configuration(
            "relative permittivities must be positive".into(),
        ));
    }
    if eps_n == eps_m {
        return Err(MeshError::Configuration(
            "transmission region requires different permittivities on its sides".into(),
        ));
    }
    Ok((eps_n + eps_m) / (2.0 * (eps_n - eps_m)))
}

pub fn build_skeleton(domain_specs: &[DomainSpec], region_specs: &[RegionSpec]) -> Result<Skeleton, MeshError> {
    let mut domains: Vec<Domain> = domain_specs
        .iter()
        .map(|d| Domain {
            id: d.id,
            class: d.class.clone(),
        })
        .collect();
    domains.sort_by_key(|d| d.id);
    if domains.windows(2).any(|w| w[0].id == w[1].id) {
        return Err(MeshError::Configuration("duplicate domain id".into()));
    }
    match domains.first() {
        Some(d0) if d0.id == 0 && d0.class == DomainClass::Air => {}
        _ => {
            return Err(MeshError::Configuration(
                "domain 0 must exist and be the unbounded air domain".into(),
            ))
        }
    }
    for d in &domains {
        if let DomainClass::Dielectric { eps_r } = d.class {
            if !(eps_r > 0.0) {
                return Err(MeshError::Configuration(format!(
                    "domain {} has non-positive permittivity",
                    d.id
                )));
            }
        }
    }

    let lookup = |id: usize| -> Result<&Domain, MeshError> {
        domains
            .binary_search_by_key(&id, |d| d.id)
            .map(|k| &domains[k])
            .map_err(|_| MeshError::Configuration(format!("region references unknown domain {id}")))
    };

    let mut regions = Vec::with_capacity(region_specs.len());
    for spec in region_specs {
        let (toward, away) = {
            let (a, b) = spec.sides;
            if a == b {
                (a, b)
            } else {
                (a.min(b), a.max(b))
            }
        };
        let d_toward = lookup(toward)?;
        let d_away = lookup(away)?;

        let (class, conductor, lambda) = if let Some(c) = spec.screen_conductor {
            let dc = lookup(c)?;
            if toward != away {
                return Err(MeshError::Configuration(format!(
                    "region {}: a screen must have both sides in the same domain",
                    spec.id
                )));
            }
            if d_toward.class.is_conductor() {
                return Err(MeshError::Configuration(format!(
                    "region {}: screen must be embedded in a dielectric domain",
                    spec.id
                )));
            }
            match dc.class {
                DomainClass::Electrode { .. } => (RegionClass::Electrode, Some(c), None),
                DomainClass::Floating { .. } => (RegionClass::Floating, Some(c), None),
                _ => {
                    return Err(MeshError::Configuration(format!(
                        "region {}: screen_conductor {} is not a conductor domain",
                        spec.id, c
                    )))
                }
            }
        } else {
            if toward == away {
                return Err(MeshError::Configuration(format!(
                    "region {}: equal sides require screen_conductor",
                    spec.id
                )));
            }
            match (d_toward.class.is_conductor(), d_away.class.is_conductor()) {
                (true, true) => {
                    return Err(MeshError::Configuration(format!(
                        "region {}: conductor-conductor contact is not supported",
                        spec.id
                    )))
                }
                (true, false) | (false, true) => {
                    let c = if d_toward.class.is_conductor() { toward } else { away };
                    let class = match lookup(c)?.class {
                        DomainClass::Electrode { .. } => RegionClass::Electrode,
                        DomainClass::Floating { .. } => RegionClass::Floating,
                        _ => unreachable!(),
                    };
                    (class, Some(c), None)
                }
                (false, false) => {
                    let et = d_toward.class.eps_r().unwrap();
                    let ea = d_away.class.eps_r().unwrap();
                    let lam = lambda_param(et, ea).map_err(|_| {
                        MeshError::Configuration(format!(
                            "region {}: both sides have permittivity {et}; a \
                             dielectric interface requires different permittivities",
                            spec.id
                        ))
                    })?;
                    (RegionClass::Dielectric, None, Some(lam))
                }
            }
        };

        regions.push(Region {
            id: spec.id,
            toward,
            away,
            screen: spec.screen_conductor,
            meshes: spec.meshes.clone(),
            class,
            conductor,
            lambda,
        });
    }
    regions.sort_by_key(|r| r.id);
    if regions.windows(2).any(|w| w[0].id == w[1].id) {
        return Err(MeshError::Configuration("duplicate region id".into()));
    }

    Ok(Skeleton { domains, regions })
}

impl Skeleton {
    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn domain(&self, n: usize) -> Result<&Domain, MeshError> {
        self.domains
            .binary_search_by_key(&n, |d| d.id)
            .map(|k| &self.domains[k])
            .map_err(|_| MeshError::Configuration(format!("unknown domain {n}")))
    }

    pub fn region(&self, a: usize) -> Result<&Region, MeshError> {
        self.regions
            .binary_search_by_key(&a, |r| r.id)
            .map(|k| &self.regions[k])
            .map_err(|_| MeshError::Configuration(format!("unknown region {a}")))
    }

    /// Relative permittivity of domain n (1 for air); error for conductors.
    pub fn eps_r(&self, n: usize) -> Result<f64, MeshError> {
        self.domain(n)?.class.eps_r().ok_or_else(|| {
            MeshError::Configuration(format!("domain {n} is a conductor and has no permittivity"))
        })
    }

    /// Region ids bounding domain n (the set A(n)), ascending.
    pub fn regions_of(&self, n: usize) -> Vec<usize> {
        self.regions
            .iter()
            .filter(|r| r.toward == n || r.away == n || r.screen == Some(n))
            .map(|r| r.id)
            .collect()
    }

    /// The two domains of region a as the unordered pair (away, toward).
    pub fn dom(&self, a: usize) -> Result<(usize, usize), MeshError> {
        let r = self.region(a)?;
        Ok((r.away, r.toward))
    }

    /// +1 when the region normal points away from domain n, -1 when it points
    /// into n. Undefined for screens (both geometric sides in one domain).
    pub fn sign(&self, n: usize, a: usize) -> Result<f64, MeshError> {
        let r = self.region(a)?;
        if r.screen.is_some() {
            return Err(MeshError::Configuration(format!(
                "sign is undefined for screen region {a}"
            )));
        }
        if r.away == n {
            Ok(1.0)
        } else if r.toward == n {
            Ok(-1.0)
        } else {
            Err(MeshError::Configuration(format!("domain {n} does not bound region {a}")))
        }
    }

    /// The domain on the other side of region a, as seen from domain n.
    /// For a screen conductor this is the embedding dielectric.
    pub fn opp(&self, n: usize, a: usize) -> Result<usize, MeshError> {
        let r = self.region(a)?;
        if r.screen == Some(n) {
            return Ok(r.toward);
        }
        if r.away == n {
            Ok(r.toward)
        } else if r.toward == n {
            Ok(r.away)
        } else {
            Err(MeshError::Configuration(format!("domain {n} does not bound region {a}")))
        }
    }

    pub fn conductors(&self) -> Vec<usize> {
        self.domains
            .iter()
            .filter(|d| d.class.is_conductor())
            .map(|d| d.id)
            .collect()
    }

    pub fn floating_conductors(&self) -> Vec<usize> {
        self.domains
            .iter()
            .filter(|d| matches!(d.class, DomainClass::Floating { .. }))
            .map(|d| d.id)
            .collect()
    }

    /// Pairwise consistency of the derived maps; used by invariant tests and
    /// cheap enough to run after construction.
    pub fn validate_consistency(&self) -> Result<(), MeshError> {
        for r in &self.regions {
            if r.screen.is_none() && r.away <= r.toward {
                return Err(MeshError::Topology(format!(
                    "region {}: normal convention violated (away {} <= toward {})",
                    r.id, r.away, r.toward
                )));
            }
        }
        for d in &self.domains {
            for a in self.regions_of(d.id) {
                let r = self.region(a)?;
                let member = r.toward == d.id || r.away == d.id || r.screen == Some(d.id);
                if !member {
                    return Err(MeshError::Topology(format!(
                        "A({}) contains region {} which does not reference it",
                        d.id, a
                    )));
                }
                if r.screen.is_none() {
                    let o = self.opp(d.id, a)?;
                    if self.opp(o, a)? != d.id {
                        return Err(MeshError::Topology(format!(
                            "opp does not round-trip for domain {} region {}",
                            d.id, a
                        )));
                    }
                    let s = self.sign(d.id, a)?;
                    let so = self.sign(o, a)?;
                    if s * so != -1.0 {
                        return Err(MeshError::Topology(format!(
                            "signs of the two sides of region {} must be opposite",
                            a
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
