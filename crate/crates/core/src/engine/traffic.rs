//! City table loading and weighted traffic generation. Endpoint pairs are
//! drawn with probability proportional to the product of the cities'
//! combined GDP/population weights.

use crate::baselines::FlowId;
use crate::error::Error;
use crate::geom::great_circle_km;
use crate::rng::derive_rng;
use crate::Result;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityRecord {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub gdp_weight: f64,
    pub population_weight: f64,
}

/// One end-to-end session between two ground stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataflow {
    pub flow_id: FlowId,
    pub src_gs: String,
    pub dst_gs: String,
    pub src_identifier: String,
    pub dst_identifier: String,
    pub start_t: f64,
    pub end_t: f64,
}

/// Loads the delimited city table (name, lat_deg, lon_deg, gdp_weight,
/// population_weight).
pub fn load_cities(path: &Path) -> Result<Vec<CityRecord>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let mut cities = Vec::new();
    for row in reader.deserialize() {
        let city: CityRecord =
            row.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        if city.gdp_weight < 0.0 || city.population_weight < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "city {:?}: negative weight",
                city.name
            )));
        }
        if !(-90.0..=90.0).contains(&city.lat_deg)
            || !(-180.0 < city.lon_deg && city.lon_deg <= 180.0)
        {
            return Err(Error::InvalidConfig(format!(
                "city {:?}: lat/lon out of range",
                city.name
            )));
        }
        cities.push(city);
    }
    Ok(cities)
}

/// Combined sampling weights: a GDP share plus a population share, each
/// normalized over the table. Zero-total-weight cities get weight 0 and are
/// never selected.
pub fn combined_weights(cities: &[CityRecord], gdp_share: f64) -> Result<Vec<f64>> {
    let gdp_total: f64 = cities.iter().map(|c| c.gdp_weight).sum();
    let pop_total: f64 = cities.iter().map(|c| c.population_weight).sum();
    if gdp_total <= 0.0 && pop_total <= 0.0 {
        return Err(Error::InvalidConfig(
            "city table has zero total weight".into(),
        ));
    }
    let weights = cities
        .iter()
        .map(|c| {
            let g = if gdp_total > 0.0 {
                c.gdp_weight / gdp_total
            } else {
                0.0
            };
            let p = if pop_total > 0.0 {
                c.population_weight / pop_total
            } else {
                0.0
            };
            gdp_share * g + (1.0 - gdp_share) * p
        })
        .collect();
    Ok(weights)
}

/// Draws `flow_count` flows: endpoints weighted by the combined city weight
/// (distinct, non-co-located), start times uniform over the run, durations
/// uniform in the configured range.
pub fn generate_traffic(
    cities: &[CityRecord],
    flow_count: u64,
    duration_s: f64,
    min_flow_s: f64,
    max_flow_s: f64,
    gdp_share: f64,
    seed: u64,
) -> Result<Vec<Dataflow>> {
    if cities.len() < 2 {
        return Err(Error::InvalidConfig(
            "traffic generation needs at least two cities".into(),
        ));
    }
    let weights = combined_weights(cities, gdp_share)?;
    let index = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidConfig(format!("city weights: {e}")))?;
    let mut rng = derive_rng(seed, "traffic", 0);
    let mut flows = Vec::with_capacity(flow_count as usize);
    for i in 0..flow_count {
        let (src, dst) = {
            let mut attempts = 0;
            loop {
                let a = index.sample(&mut rng);
                let b = index.sample(&mut rng);
                let distinct = a != b
                    && great_circle_km(
                        cities[a].lat_deg,
                        cities[a].lon_deg,
                        cities[b].lat_deg,
                        cities[b].lon_deg,
                    ) > 1.0;
                if distinct {
                    break (a, b);
                }
                attempts += 1;
                if attempts > 10_000 {
                    return Err(Error::InvalidConfig(
                        "city table yields no distinct endpoint pairs".into(),
                    ));
                }
            }
        };
        let start_t = rng.gen_range(0.0..duration_s);
        let flow_len = if min_flow_s == max_flow_s {
            min_flow_s
        } else {
            rng.gen_range(min_flow_s..=max_flow_s)
        };
        flows.push(Dataflow {
            flow_id: FlowId(i),
            src_gs: cities[src].name.clone(),
            dst_gs: cities[dst].name.clone(),
            src_identifier: cities[src].name.clone(),
            dst_identifier: cities[dst].name.clone(),
            start_t,
            end_t: start_t + flow_len,
        });
    }
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn city(name: &str, lat: f64, lon: f64, gdp: f64, pop: f64) -> CityRecord {
        CityRecord {
            name: name.into(),
            lat_deg: lat,
            lon_deg: lon,
            gdp_weight: gdp,
            population_weight: pop,
        }
    }

    #[test]
    fn two_equal_cities_always_pair() {
        let cities = vec![
            city("a", 0.0, 0.0, 1.0, 1.0),
            city("b", 10.0, 10.0, 1.0, 1.0),
        ];
        let flows = generate_traffic(&cities, 50, 100.0, 10.0, 20.0, 0.5, 7).unwrap();
        for f in flows {
            assert_ne!(f.src_gs, f.dst_gs);
            assert!(f.start_t >= 0.0 && f.start_t < 100.0);
            assert!(f.end_t - f.start_t >= 10.0 && f.end_t - f.start_t <= 20.0);
        }
    }

    #[test]
    fn zero_weight_city_never_selected() {
        let cities = vec![
            city("a", 0.0, 0.0, 1.0, 1.0),
            city("b", 10.0, 10.0, 1.0, 1.0),
            city("ghost", -10.0, -10.0, 0.0, 0.0),
        ];
        let flows = generate_traffic(&cities, 200, 100.0, 10.0, 20.0, 0.5, 3).unwrap();
        assert!(flows
            .iter()
            .all(|f| f.src_gs != "ghost" && f.dst_gs != "ghost"));
    }

    #[test]
    fn fewer_than_two_cities_is_an_error() {
        let cities = vec![city("a", 0.0, 0.0, 1.0, 1.0)];
        assert!(generate_traffic(&cities, 5, 100.0, 10.0, 20.0, 0.5, 3).is_err());
    }

    /// Pair frequencies over 1e5 draws track the analytic product
    /// distribution within 3-sigma binomial bounds.
    #[test]
    fn pair_frequency_matches_weights() {
        let cities = vec![
            city("a", 0.0, 0.0, 4.0, 4.0),
            city("b", 20.0, 0.0, 3.0, 3.0),
            city("c", 0.0, 40.0, 2.0, 2.0),
            city("d", -30.0, 10.0, 1.0, 1.0),
        ];
        let n = 100_000u64;
        let flows = generate_traffic(&cities, n, 100.0, 10.0, 20.0, 0.5, 11).unwrap();
        let w = [0.4, 0.3, 0.2, 0.1];
        let mut idx = BTreeMap::new();
        for (i, c) in cities.iter().enumerate() {
            idx.insert(c.name.clone(), i);
        }
        // rejection of equal pairs renormalizes by (1 - sum w_i^2)
        let renorm: f64 = 1.0 - w.iter().map(|x| x * x).sum::<f64>();
        let mut counts = BTreeMap::new();
        for f in &flows {
            *counts.entry((idx[&f.src_gs], idx[&f.dst_gs])).or_insert(0u64) += 1;
        }
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let p = w[i] * w[j] / renorm;
                let expect = n as f64 * p;
                let sigma = (n as f64 * p * (1.0 - p)).sqrt();
                let got = *counts.get(&(i, j)).unwrap_or(&0) as f64;
                assert!(
                    (got - expect).abs() <= 3.0 * sigma,
                    "pair ({i},{j}): got {got}, expect {expect} +- {sigma}"
                );
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let cities = vec![
            city("a", 0.0, 0.0, 1.0, 2.0),
            city("b", 10.0, 10.0, 2.0, 1.0),
            city("c", -10.0, 30.0, 1.0, 1.0),
        ];
        let f1 = generate_traffic(&cities, 20, 50.0, 5.0, 10.0, 0.5, 42).unwrap();
        let f2 = generate_traffic(&cities, 20, 50.0, 5.0, 10.0, 0.5, 42).unwrap();
        assert_eq!(f1, f2);
        let f3 = generate_traffic(&cities, 20, 50.0, 5.0, 10.0, 0.5, 43).unwrap();
        assert_ne!(f1, f3);
    }
}
