"""Randomized builders shared by property and acceptance tests."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

from delib.store import DiscussionStore

WORDS = (
    "street park lane bus bike light traffic noise tree market school bridge "
    "crossing bench garden parking route stop shade fountain safety budget"
).split()


def random_text(rng: random.Random, n_min: int = 2, n_max: int = 8) -> str:
    n = rng.randint(n_min, n_max)
    return " ".join(rng.choice(WORDS) for _ in range(n))


def build_random_store(
    rng: random.Random, max_entities: int = 50, step_seconds: int = 1800
) -> tuple[DiscussionStore, str]:
    """Grow a random but always-valid graph via public store ops only."""
    t = {"now": datetime(2026, 1, 1, tzinfo=timezone.utc)}

    def clock():
        t["now"] += timedelta(seconds=rng.randint(1, step_seconds))
        return t["now"]

    store = DiscussionStore(clock=clock)
    store.register_user("Mod", "moderator", user_id="mod")
    users = ["mod"]
    for i in range(rng.randint(2, 5)):
        uid = f"u{i}"
        store.register_user(f"User {i}", "participant", user_id=uid)
        users.append(uid)
    disc = store.create_discussion(random_text(rng, 2, 4), random_text(rng), "mod")
    issues: list[str] = []
    positions: list[str] = []
    entities = 0
    for _ in range(rng.randint(5, max_entities)):
        if entities >= max_entities:
            break
        roll = rng.random()
        author = rng.choice(users)
        if roll < 0.2 or not issues:
            issues.append(store.add_node(disc.id, disc.id, "issue", random_text(rng), author))
            entities += 1
        elif roll < 0.5 or not positions:
            positions.append(
                store.add_node(disc.id, rng.choice(issues), "position", random_text(rng), author)
            )
            entities += 1
        elif roll < 0.75:
            store.add_node(
                disc.id,
                rng.choice(positions),
                "argument",
                random_text(rng),
                author,
                side=rng.choice(["pro", "con"]),
            )
            entities += 1
        else:
            store.set_reflection(
                rng.choice(positions), rng.choice(users), rng.choice(["agree", "neutral", "disagree"])
            )
    return store, disc.id


def random_mutation_sequence(rng: random.Random, store: DiscussionStore) -> None:
    """Apply a burst of random valid mutations across every op kind."""
    users = list(store.users)
    if not users:
        store.register_user("Mod", "moderator", user_id="mod")
        users = ["mod"]
    discussions = [d for d in store.discussions.values() if d.status == "open"]
    if not discussions or rng.random() < 0.1:
        mod = next(u for u in users if store.users[u].role in ("moderator", "admin"))
        discussions.append(store.create_discussion(random_text(rng, 2, 4), "", mod))
    for _ in range(rng.randint(1, 12)):
        disc = rng.choice(discussions)
        issues = [i for i in store.issues.values() if i.discussion_id == disc.id]
        positions = [
            p for p in store.positions.values() if store.issues[p.issue_id].discussion_id == disc.id
        ]
        author = rng.choice(users)
        roll = rng.random()
        try:
            if roll < 0.1:
                uid = f"x{rng.randrange(10**6)}"
                store.register_user(f"User {uid}", "participant", user_id=uid)
                users.append(uid)
            elif roll < 0.3 or not issues:
                store.add_node(disc.id, disc.id, "issue", random_text(rng), author)
            elif roll < 0.55:
                store.add_node(disc.id, rng.choice(issues).id, "position", random_text(rng), author)
            elif roll < 0.75 and positions:
                store.add_node(
                    disc.id,
                    rng.choice(positions).id,
                    "argument",
                    random_text(rng),
                    author,
                    side=rng.choice(["pro", "con"]),
                )
            elif roll < 0.9 and positions:
                store.set_reflection(
                    rng.choice(positions).id,
                    rng.choice(users),
                    rng.choice(["agree", "neutral", "disagree"]),
                )
            elif roll < 0.95:
                store.publish_report(
                    {
                        "id": f"g{rng.randrange(10**6)}",
                        "discussion_id": disc.id,
                        "category": "roads",
                        "description": random_text(rng),
                        "location": {"lat": 45.0, "lon": 7.6},
                    }
                )
            else:
                mod = next(u for u in users if store.users[u].role in ("moderator", "admin"))
                store.close_discussion(disc.id, mod)
                discussions = [d for d in store.discussions.values() if d.status == "open"]
                if not discussions:
                    discussions = [store.create_discussion(random_text(rng, 2, 4), "", mod)]
        except Exception:
            # closed-discussion races are part of the fuzz, not failures
            continue
