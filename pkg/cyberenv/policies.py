"""Scripted blue policies used as reference points for the learning agent."""

from cyberenv.env import COMPROMISED, PATCHING, CyberDefenseEnv


class NoOpPolicy:
    def act(self, env: CyberDefenseEnv) -> int:
        return 0


class PerfectDefensePolicy:
    """Oracle that reads the red schedule (and the random agents' plans) ahead of time.

    Priority each step: block a link a ddos is about to hit, pre-patch a node
    about to be attacked, patch any compromised node, unblock a link that no
    longer needs protecting, otherwise no-op.
    """

    def act(self, env: CyberDefenseEnv) -> int:
        t = env.timestep
        spec = env.spec
        upcoming = [e for e in spec.red_schedule if e.timestep == t and e.success_probability > 0]
        upcoming_nodes = {e.target for e in upcoming if e.kind == "compromise"}
        upcoming_nodes |= {node for step, node in env.random_agent_attack_steps() if step == t}

        for event in upcoming:
            if event.kind == "ddos" and not env.blocked[env.link_index[event.target]]:
                return env.block_action(event.target)
        for node_id in sorted(upcoming_nodes):
            if env.status[env.node_index[node_id]] != PATCHING:
                return env.patch_action(node_id)

        for i, node in enumerate(spec.nodes):
            if env.status[i] == COMPROMISED:
                return env.patch_action(node.id)

        threatened_now = {e.target for e in upcoming if e.kind == "ddos"}
        for j, link in enumerate(spec.links):
            if env.blocked[j] and link.id not in threatened_now:
                return env.unblock_action(link.id)
        return 0


def run_episode(env: CyberDefenseEnv, policy, seed=None) -> float:
    """Play one full episode with a scripted policy; returns the episode reward."""
    env.reset(seed)
    done = False
    while not done:
        _, _, done = env.step(policy.act(env))
    return env.episode_reward
