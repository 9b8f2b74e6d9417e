//! Post-order walk of the finished tree returning vacated agents home.

use crate::agents::{AgentState, Phase};
use crate::runtime::{Action, Local, Marker};

use super::{find_by_id, general, head_leaves, make_home, move_group, scan, violation};

pub(super) fn step(l: &mut Local<'_>) -> Action {
    let s = scan(l);
    let ctx = l.me().ctx;
    let fresh = ctx.phase == Phase::RetraceFresh;
    let arrival = if fresh { None } else { l.me().arrival_port };
    let tree = l.me().tree_label;
    let me = l.index();

    let x = match s.own {
        Some(o) => o,
        None => {
            // a fresh walk can start on a vacated head node, whose agent is ctx.prev_id
            let want = if fresh { ctx.prev_id } else { ctx.next_agent_id };
            let target = find_by_id(l, &s.members, want)
                .filter(|&t| l.get(t).state == AgentState::SettledScout && !l.get(t).free);
            if let Some(f) = s.foreign {
                let from = l.get(f).tree_label;
                if from > tree || target.is_none() {
                    return general::lose(l, Some(from), None);
                }
                general::evict(l, f);
            }
            let Some(t) = target else {
                if want.is_some() && find_by_id(l, &s.members, want).is_none() {
                    // a larger traversal came through and took this node's agent
                    return general::lose(l, None, None);
                }
                return violation(l, "retrace reached a node with no agent to settle");
            };
            make_home(l, t);
            l.me_mut().ctx.group_size -= 1;
            let id = l.get(t).id;
            l.mark(Marker::Settle { agent: id });
            t
        }
    };
    let s = scan(l);
    let vacated_left = s.members.iter().any(|&i| l.get(i).state == AgentState::SettledScout && !l.get(i).free);
    if !vacated_left {
        if s.members.is_empty() {
            head_leaves(l);
            let a = l.me_mut();
            a.lead = false;
            a.ctx = Default::default();
            return Action::Stay;
        }
        // agents picked up on the way still need nodes
        return general::restart(l, &s.members, x == me);
    }

    let a = l.get(x).clone();
    let mut ctx = l.me().ctx;
    let (next, down);
    if ctx.phase == Phase::RetraceDown && arrival != a.parent_port {
        // x was re-parented; its old parent still points here
        next = arrival;
        ctx.sibling_details = a.detached_sibling;
        ctx.next_agent_id = None;
        down = false;
    } else if let Some(rc) = a.recent_child {
        if Some(rc) == arrival {
            match ctx.sibling_details.take() {
                None => {
                    l.get_mut(x).recent_child = None;
                    next = a.parent_port;
                    ctx.next_agent_id = a.parent.map(|p| p.0);
                    ctx.sibling_details = a.sibling;
                    down = false;
                }
                Some((id, port)) => {
                    next = Some(port);
                    ctx.next_agent_id = Some(id);
                    l.get_mut(x).recent_child = Some(port);
                    down = true;
                }
            }
        } else {
            next = Some(rc);
            ctx.next_agent_id =
                s.members.iter().map(|&i| l.get(i)).find(|m| m.parent == Some((a.id, rc))).map(|m| m.id);
            ctx.sibling_details = None;
            down = true;
        }
    } else {
        next = a.parent_port;
        ctx.next_agent_id = a.parent.map(|p| p.0);
        ctx.sibling_details = a.sibling;
        down = false;
    }
    let Some(port) = next else {
        return violation(l, "retrace walked off the root with vacated agents");
    };
    ctx.phase = if down { Phase::RetraceDown } else { Phase::RetraceUp };
    l.me_mut().ctx = ctx;
    move_group(l, &s.members, port)
}
