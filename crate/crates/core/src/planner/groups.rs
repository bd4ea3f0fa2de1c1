//! Merging nearby pedestrians that walk the same way into one pseudo-agent.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_diff, AgentId, AgentState, Vec2};

/// A pedestrian or merged group as seen by the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveAgent {
    pub state: AgentState,
    /// Vital radius used in separation checks.
    pub radius: f64,
    pub members: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub groups: Vec<BTreeSet<AgentId>>,
    pub effective_agents: Vec<EffectiveAgent>,
}

impl GroupAssignment {
    /// The effective agent that contains `id`.
    pub fn agent_of(&self, id: AgentId) -> Option<&EffectiveAgent> {
        self.effective_agents.iter().find(|a| a.members.contains(&id))
    }
}

/// Links agents closer than `beta` whose headings differ by at most
/// `heading_tolerance`, then takes connected components. Each group of two or
/// more becomes a pseudo-agent at the centroid with mean heading and speed and
/// radius `beta` plus the largest member distance to the centroid.
pub fn recognize_groups(agents: &[AgentState], beta: f64, heading_tolerance: f64) -> GroupAssignment {
    let n = agents.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&agents[i], &agents[j]);
            if a.position.distance(b.position) < beta && angle_diff(a.heading, b.heading).abs() <= heading_tolerance {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = components.len();
            components.push(Vec::new());
        }
        components[root_slot[r]].push(i);
    }

    let mut out = GroupAssignment::default();
    for comp in components {
        let members: Vec<AgentId> = comp.iter().map(|&i| agents[i].id).collect();
        out.groups.push(members.iter().copied().collect());
        if comp.len() == 1 {
            out.effective_agents.push(EffectiveAgent {
                state: agents[comp[0]].clone(),
                radius: beta,
                members,
            });
            continue;
        }
        let k = comp.len() as f64;
        let centroid = comp.iter().fold(Vec2::ZERO, |acc, &i| acc + agents[i].position) / k;
        let speed = comp.iter().map(|&i| agents[i].speed).sum::<f64>() / k;
        // circular mean; members are within the tolerance of each other so it is well defined
        let heading = comp
            .iter()
            .fold(Vec2::ZERO, |acc, &i| acc + Vec2::from_angle(agents[i].heading))
            .angle();
        let spread = comp
            .iter()
            .map(|&i| agents[i].position.distance(centroid))
            .fold(0.0, f64::max);
        let group_no = members
            .iter()
            .filter_map(|id| match id {
                AgentId::Human(n) => Some(*n),
                AgentId::Group(n) => Some(*n),
                AgentId::Robot => None,
            })
            .min()
            .unwrap_or(0);
        let mut state = AgentState::new(AgentId::Group(group_no), centroid, heading, speed);
        state.group = Some(group_no);
        out.effective_agents.push(EffectiveAgent {
            state,
            radius: beta + spread,
            members,
        });
    }
    out.effective_agents.sort_by_key(|a| a.state.id);
    out
}
