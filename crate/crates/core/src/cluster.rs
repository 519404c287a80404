//! Online threshold clustering of fingerprints for device counting.

use serde::Serialize;

use crate::codec::{hamming, Fingerprint, MatchError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: usize,
    /// Fingerprint of the first member; never updated.
    pub representative: Fingerprint,
    pub members: Vec<usize>,
}

impl Cluster {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }
}

/// Streaming clusterer: each input joins the nearest representative closer
/// than `tau` (ties to the lowest id) or opens a new cluster.
#[derive(Debug, Clone)]
pub struct OnlineClusterer {
    tau: u32,
    clusters: Vec<Cluster>,
    assignment: Vec<usize>,
}

impl OnlineClusterer {
    pub fn new(tau: u32) -> Self {
        OnlineClusterer {
            tau,
            clusters: Vec::new(),
            assignment: Vec::new(),
        }
    }

    /// Assigns the next fingerprint and returns its cluster id.
    pub fn push(&mut self, fp: &Fingerprint) -> Result<usize, MatchError> {
        let index = self.assignment.len();
        let mut nearest: Option<(u32, usize)> = None;
        for c in &self.clusters {
            let d = hamming(&c.representative, fp)?;
            if nearest.is_none_or(|(best, _)| d < best) {
                nearest = Some((d, c.id));
            }
        }
        let id = match nearest {
            Some((d, id)) if d < self.tau => {
                self.clusters[id].members.push(index);
                id
            }
            _ => {
                let id = self.clusters.len();
                self.clusters.push(Cluster {
                    id,
                    representative: fp.clone(),
                    members: vec![index],
                });
                id
            }
        };
        self.assignment.push(id);
        Ok(id)
    }

    pub fn finish(self) -> ClusteringRun {
        ClusteringRun {
            clusters: self.clusters,
            tau: self.tau,
            assignment: self.assignment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteringRun {
    pub clusters: Vec<Cluster>,
    pub tau: u32,
    /// Cluster id of each input, in input order.
    pub assignment: Vec<usize>,
}

impl ClusteringRun {
    pub fn count_devices(&self) -> usize {
        self.clusters.len()
    }

    pub fn summary(&self) -> ClusterSummary {
        ClusterSummary {
            tau: self.tau,
            inputs: self.assignment.len(),
            cluster_count: self.clusters.len(),
            sizes: self.clusters.iter().map(Cluster::member_count).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterSummary {
    pub tau: u32,
    pub inputs: usize,
    pub cluster_count: usize,
    pub sizes: Vec<usize>,
}

pub fn cluster_stream<'a, I>(fingerprints: I, tau: u32) -> Result<ClusteringRun, MatchError>
where
    I: IntoIterator<Item = &'a Fingerprint>,
{
    let mut clusterer = OnlineClusterer::new(tau);
    for fp in fingerprints {
        clusterer.push(fp)?;
    }
    Ok(clusterer.finish())
}

pub fn count_devices(run: &ClusteringRun) -> usize {
    run.count_devices()
}
