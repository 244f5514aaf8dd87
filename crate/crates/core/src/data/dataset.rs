use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::series::{PowerSeries, SeriesRole};
use crate::error::{Error, Result};

pub type MeterId = String;

/// Tolerance of the `demand + injection = net` identity, in kW.
pub(crate) const BALANCE_TOL_KW: f64 = 1e-9;

/// Optional per-meter metadata. Synthetic feeders fill it in; ingested
/// datasets carry it only when an attributes file is supplied.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeterAttributes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_pattern: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_kw: Option<f64>,
}

/// Fully observable customer without PV.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandMeter {
    pub id: MeterId,
    pub demand: PowerSeries,
}

/// Fully observable customer with separately metered PV.
#[derive(Clone, Debug, PartialEq)]
pub struct PvMeter {
    pub id: MeterId,
    pub demand: PowerSeries,
    pub injection: PowerSeries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    pub demand: PowerSeries,
    pub injection: PowerSeries,
}

/// Customer with only net demand observed; truth is kept for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct NetMeter {
    pub id: MeterId,
    pub net: PowerSeries,
    pub truth: Option<Truth>,
}

/// All customers of one feeder on a common hourly span.
#[derive(Clone, Debug, PartialEq)]
pub struct FeederDataset {
    start: DateTime<Utc>,
    len: usize,
    pub(crate) observed_demand: Vec<DemandMeter>,
    pub(crate) observed_pairs: Vec<PvMeter>,
    pub(crate) net_only: Vec<NetMeter>,
    groups: BTreeMap<String, Vec<MeterId>>,
    attributes: BTreeMap<MeterId, MeterAttributes>,
}

fn check_role(series: &PowerSeries, role: SeriesRole, id: &str) -> Result<()> {
    if series.role() != role {
        return Err(Error::InvalidSeries(format!(
            "meter {id}: expected {role:?}, found {:?}",
            series.role()
        )));
    }
    Ok(())
}

impl FeederDataset {
    pub fn new(
        observed_demand: Vec<DemandMeter>,
        observed_pairs: Vec<PvMeter>,
        net_only: Vec<NetMeter>,
        groups: BTreeMap<String, Vec<MeterId>>,
        attributes: BTreeMap<MeterId, MeterAttributes>,
    ) -> Result<Self> {
        let first = observed_demand
            .first()
            .map(|m| &m.demand)
            .or_else(|| observed_pairs.first().map(|m| &m.demand))
            .or_else(|| net_only.first().map(|m| &m.net))
            .ok_or_else(|| Error::InsufficientCustomers("dataset has no meters".into()))?;
        let (start, len) = (first.start(), first.len());

        let span_check = |s: &PowerSeries, id: &str| -> Result<()> {
            if s.start() != start || s.len() != len {
                return Err(Error::SpanMismatch(format!(
                    "meter {id} spans {} samples from {}, dataset spans {len} from {start}",
                    s.len(),
                    s.start()
                )));
            }
            Ok(())
        };

        let mut ids = BTreeSet::new();
        let mut register = |id: &str| -> Result<()> {
            if !ids.insert(id.to_string()) {
                return Err(Error::InvalidConfig(format!("meter id {id} appears twice")));
            }
            Ok(())
        };

        for m in &observed_demand {
            register(&m.id)?;
            check_role(&m.demand, SeriesRole::NativeDemand, &m.id)?;
            span_check(&m.demand, &m.id)?;
        }
        for m in &observed_pairs {
            register(&m.id)?;
            check_role(&m.demand, SeriesRole::NativeDemand, &m.id)?;
            check_role(&m.injection, SeriesRole::SolarInjection, &m.id)?;
            span_check(&m.demand, &m.id)?;
            span_check(&m.injection, &m.id)?;
        }
        for m in &net_only {
            register(&m.id)?;
            check_role(&m.net, SeriesRole::NetDemand, &m.id)?;
            span_check(&m.net, &m.id)?;
            if let Some(truth) = &m.truth {
                check_role(&truth.demand, SeriesRole::NativeDemand, &m.id)?;
                check_role(&truth.injection, SeriesRole::SolarInjection, &m.id)?;
                span_check(&truth.demand, &m.id)?;
                span_check(&truth.injection, &m.id)?;
                check_balance(&m.id, &truth.demand, &truth.injection, &m.net)?;
            }
        }
        for (name, members) in &groups {
            if let Some(missing) = members.iter().find(|id| !ids.contains(*id)) {
                return Err(Error::UnknownMeter(format!("{missing} (group {name})")));
            }
        }

        Ok(Self {
            start,
            len,
            observed_demand,
            observed_pairs,
            net_only,
            groups,
            attributes,
        })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    /// Number of hourly samples in the common span.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn observed_demand(&self) -> &[DemandMeter] {
        &self.observed_demand
    }

    pub fn observed_pairs(&self) -> &[PvMeter] {
        &self.observed_pairs
    }

    pub fn net_only(&self) -> &[NetMeter] {
        &self.net_only
    }

    pub fn groups(&self) -> &BTreeMap<String, Vec<MeterId>> {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Result<&[MeterId]> {
        self.groups
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownGroup(name.to_string()))
    }

    pub fn attributes(&self) -> &BTreeMap<MeterId, MeterAttributes> {
        &self.attributes
    }

    pub fn attribute(&self, id: &str) -> Option<&MeterAttributes> {
        self.attributes.get(id)
    }

    pub fn with_groups(mut self, groups: BTreeMap<String, Vec<MeterId>>) -> Result<Self> {
        let ids: BTreeSet<&str> = self.meter_ids().collect();
        for (name, members) in &groups {
            if let Some(missing) = members.iter().find(|id| !ids.contains(id.as_str())) {
                return Err(Error::UnknownMeter(format!("{missing} (group {name})")));
            }
        }
        self.groups = groups;
        Ok(self)
    }

    pub fn with_attributes(mut self, attributes: BTreeMap<MeterId, MeterAttributes>) -> Self {
        self.attributes = attributes;
        self
    }

    pub fn meter_ids(&self) -> impl Iterator<Item = &str> {
        self.observed_demand
            .iter()
            .map(|m| m.id.as_str())
            .chain(self.observed_pairs.iter().map(|m| m.id.as_str()))
            .chain(self.net_only.iter().map(|m| m.id.as_str()))
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + chrono::Duration::hours(index as i64)
    }

    /// Index of `at` on the dataset grid, if inside the span.
    pub fn index_of(&self, at: DateTime<Utc>) -> Option<usize> {
        PowerSeries::zeros(self.start, SeriesRole::NetDemand, self.len).index_of(at)
    }
}

fn check_balance(
    id: &str,
    demand: &PowerSeries,
    injection: &PowerSeries,
    net: &PowerSeries,
) -> Result<()> {
    for (i, ((d, g), n)) in demand
        .values()
        .iter()
        .zip(injection.values())
        .zip(net.values())
        .enumerate()
    {
        if (d + g - n).abs() > BALANCE_TOL_KW {
            return Err(Error::InvalidSeries(format!(
                "meter {id}: demand + injection != net at {} ({d} + {g} vs {n})",
                demand.timestamp(i)
            )));
        }
    }
    Ok(())
}

/// Net demand of a customer group, with summed truth when every member has it.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAggregate {
    pub net: PowerSeries,
    pub truth: Option<Truth>,
}

/// Element-wise sum of the net demand of every member of `group`.
///
/// Fully observable members contribute their measured demand (and
/// injection); their truth is the measurement itself.
pub fn aggregate_group(dataset: &FeederDataset, group: &str) -> Result<GroupAggregate> {
    let members = dataset.group(group)?;
    aggregate_members(dataset, members)
}

pub fn aggregate_members(dataset: &FeederDataset, members: &[MeterId]) -> Result<GroupAggregate> {
    if members.is_empty() {
        return Err(Error::InsufficientCustomers("group has no members".into()));
    }
    let len = dataset.len();
    let mut net = vec![0.0; len];
    let mut demand = vec![0.0; len];
    let mut injection = vec![0.0; len];
    let mut complete = true;

    let add = |acc: &mut [f64], s: &PowerSeries| {
        for (a, v) in acc.iter_mut().zip(s.values()) {
            *a += v;
        }
    };

    for id in members {
        if let Some(m) = dataset.observed_demand.iter().find(|m| &m.id == id) {
            add(&mut net, &m.demand);
            add(&mut demand, &m.demand);
        } else if let Some(m) = dataset.observed_pairs.iter().find(|m| &m.id == id) {
            add(&mut net, &m.demand);
            add(&mut net, &m.injection);
            add(&mut demand, &m.demand);
            add(&mut injection, &m.injection);
        } else if let Some(m) = dataset.net_only.iter().find(|m| &m.id == id) {
            add(&mut net, &m.net);
            match &m.truth {
                Some(t) => {
                    add(&mut demand, &t.demand);
                    add(&mut injection, &t.injection);
                }
                None => complete = false,
            }
        } else {
            return Err(Error::UnknownMeter(id.clone()));
        }
    }

    let start = dataset.start();
    let net = PowerSeries::new(start, SeriesRole::NetDemand, net)?;
    let truth = if complete {
        Some(Truth {
            demand: PowerSeries::new(start, SeriesRole::NativeDemand, demand)?,
            injection: PowerSeries::new(start, SeriesRole::SolarInjection, injection)?,
        })
    } else {
        None
    };
    Ok(GroupAggregate { net, truth })
}
