//! Several groups at once: start-up, losing to a larger traversal, chasing
//! it and joining, or starting over one level higher.

use crate::agents::{AgentState, LeadContext, Phase, Role, Task, TreeLabel};
use crate::graph::Port;
use crate::p1tree::DfsNodeType;
use crate::runtime::{Action, Local, Marker};

use super::{grow, move_group, rooted, scan};

/// First cycle of an agent: the lowest ID on each node forms the group.
pub(super) fn organize(l: &mut Local<'_>) -> Action {
    let my_id = l.me().id;
    let group: Vec<usize> = l.here().iter().copied().filter(|&i| l.get(i).role == Role::Initial).collect();
    if group.iter().any(|&i| l.get(i).id < my_id) {
        return Action::Stay;
    }
    let leader = group.iter().map(|&i| l.get(i).id).max().unwrap_or(my_id);
    let label = TreeLabel { leader, level: 0, weight: group.len() as u32 };
    for &i in &group {
        let a = l.get_mut(i);
        a.role = Role::Member;
        a.tree_label = label;
    }
    let me = l.me_mut();
    me.lead = true;
    me.ctx = LeadContext { group_size: group.len() as u32, ..LeadContext::default() };
    rooted::arrive(l)
}

/// Takes a lower-labelled settled agent into the pool; it needs a new home.
pub(super) fn evict(l: &mut Local<'_>, f: usize) {
    let from = l.get(f).tree_label;
    let into = grow(l, 1);
    let a = l.get_mut(f);
    a.state = AgentState::SettledScout;
    a.role = Role::Member;
    a.free = true;
    a.clear_tree_fields();
    a.tree_label = into;
    l.me_mut().ctx.group_size += 1;
    l.mark(Marker::Merge { from, into });
}

/// The group gives up its traversal. Settled agents stay where they are and
/// will be absorbed by whoever passes; the travelling agents go chasing,
/// first through `via` if given.
pub(super) fn lose(l: &mut Local<'_>, target: Option<TreeLabel>, via: Option<Port>) -> Action {
    let s = scan(l);
    let tree = l.me().tree_label;
    for &i in &s.members {
        let a = l.get_mut(i);
        a.role = Role::Chaser;
        if a.state == AgentState::SettledScout {
            a.free = true;
        }
        a.clear_tree_fields();
        a.clear_scout_fields();
    }
    if let Some(o) = s.own {
        l.get_mut(o).head_here = false;
    }
    l.me_mut().ctx = LeadContext {
        phase: Phase::Chase,
        group_size: s.members.len() as u32,
        chase_target: target,
        next_port: via,
        chase_hops: via.is_some() as u8,
        ..LeadContext::default()
    };
    l.mark(Marker::Lose { tree });
    chase(l)
}

fn step_limit(target: &TreeLabel) -> u32 {
    4 * target.weight + 8
}

pub(super) fn chase(l: &mut Local<'_>) -> Action {
    let s = scan(l);
    let mut ctx = l.me().ctx;
    let mine = l.me().tree_label;
    if ctx.chase_hops > 0 {
        ctx.chase_hops = 0;
        let port = ctx.next_port.take().unwrap_or(1);
        l.me_mut().ctx = ctx;
        return move_group(l, &s.members, port);
    }
    let head = l
        .here()
        .iter()
        .copied()
        .filter(|&i| {
            let a = l.get(i);
            a.lead && a.role == Role::Member && a.task == Task::Idle && a.tree_label > mine
        })
        .max_by_key(|&i| l.get(i).tree_label);
    if let Some(h) = head {
        return join(l, &s.members, h);
    }
    let found = s.foreign.map(|f| (l.get(f).tree_label, l.get(f).head_here, l.get(f).recent_port));
    let target = match ctx.chase_target {
        Some(t) => t,
        None => match found {
            Some((t, ..)) if t > mine => t,
            _ => return restart(l, &s.members, false),
        },
    };
    ctx.chase_target = Some(target);
    let head_near = l.here().iter().any(|&i| {
        let a = l.get(i);
        a.role == Role::Member && a.tree_label >= target
    });
    if head_near || found.is_some_and(|(t, here, _)| here && t.same_tree(&target)) {
        l.me_mut().ctx = ctx;
        return Action::Stay;
    }
    match found {
        Some((t, _, next)) if t.same_tree(&target) || t > target => {
            if !t.same_tree(&target) {
                ctx.chase_target = Some(t);
                ctx.chase_steps = 0;
            }
            match next {
                Some(p) if ctx.chase_steps < step_limit(&t) => {
                    ctx.chase_steps += 1;
                    l.me_mut().ctx = ctx;
                    move_group(l, &s.members, p)
                }
                _ => restart(l, &s.members, false),
            }
        }
        _ => restart(l, &s.members, false),
    }
}

fn join(l: &mut Local<'_>, members: &[usize], h: usize) -> Action {
    let from = l.me().tree_label;
    let m = members.len() as u32;
    let into = {
        let head = l.get_mut(h);
        head.ctx.group_size += m;
        head.tree_label.weight += m;
        head.tree_label
    };
    for &i in members {
        let a = l.get_mut(i);
        a.role = Role::Member;
        a.tree_label = into;
        a.lead = false;
        a.ctx = LeadContext::default();
    }
    l.mark(Marker::Merge { from, into });
    Action::Stay
}

/// A new traversal one level above everything seen here, rooted on this node.
pub(super) fn restart(l: &mut Local<'_>, members: &[usize], caller_leaves: bool) -> Action {
    let s = scan(l);
    let mut level = l.me().tree_label.level;
    if let Some(t) = l.me().ctx.chase_target {
        level = level.max(t.level);
    }
    if let Some(f) = s.foreign {
        level = level.max(l.get(f).tree_label.level);
    }
    let Some(leader) = members.iter().map(|&i| l.get(i).id).max() else {
        return Action::Stay;
    };
    let label = TreeLabel { leader, level: level + 1, weight: members.len() as u32 };
    for &i in members {
        let a = l.get_mut(i);
        a.role = Role::Member;
        a.clear_tree_fields();
        a.clear_scout_fields();
        a.tree_label = label;
        a.lead = false;
        a.ctx = LeadContext::default();
    }
    let new = members.iter().copied().min_by_key(|&i| l.get(i).id).expect("members");
    let me = l.index();
    let lead = l.get_mut(new);
    lead.lead = true;
    lead.ctx = LeadContext { group_size: members.len() as u32, ..LeadContext::default() };
    l.mark(Marker::Restart { tree: label });
    if caller_leaves || new != me {
        if new != me {
            let a = l.me_mut();
            a.lead = false;
            a.ctx = LeadContext::default();
        }
        return Action::Stay;
    }
    rooted::arrive(l)
}

/// End of a shortcut move: settle on the neighbor, or start over if it got taken.
pub(super) fn settle_here(l: &mut Local<'_>) -> Action {
    let taken = l.here().iter().any(|&i| l.get(i).state == AgentState::Settled);
    let arrival = l.me().arrival_port;
    let me = l.me_mut();
    me.task = Task::Idle;
    if !taken {
        me.state = AgentState::Settled;
        me.role = Role::Home;
        me.free = false;
        me.parent_port = arrival;
        me.node_type = DfsNodeType::FullyVisited;
        let id = me.id;
        l.mark(Marker::Settle { agent: id });
        return Action::Stay;
    }
    me.role = Role::Chaser;
    me.lead = true;
    me.ctx = LeadContext { phase: Phase::Chase, group_size: 1, ..LeadContext::default() };
    chase(l)
}
