import random

SCHEMA = """\
[aspects]
food: pizza sushi
service: waiter staff
[sentiments]
good: great tasty
bad: awful rude
"""

ASPECT_WORDS = {
    "food": ["pizza", "sushi", "pasta", "flavor"],
    "service": ["waiter", "staff", "manager", "host"],
}
SENTIMENT_WORDS = {
    "good": ["great", "tasty", "friendly", "lovely"],
    "bad": ["awful", "rude", "bland", "slow"],
}
FILLER = ["the", "was", "and", "very", "place", "night"]


def make_corpus(n=160, seed=0, labeled=False):
    """Tiny planted-topic corpus; optionally 'text<TAB>aspect<TAB>sentiment'."""
    rng = random.Random(seed)
    joint = {
        (s, a): [f"{s}{a}{i}" for i in range(6)]
        for s in SENTIMENT_WORDS
        for a in ASPECT_WORDS
    }
    lines = []
    for _ in range(n):
        a = rng.choice(list(ASPECT_WORDS))
        s = rng.choice(list(SENTIMENT_WORDS))
        words = (
            [rng.choice(ASPECT_WORDS[a]), rng.choice(SENTIMENT_WORDS[s])]
            + rng.choices(joint[(s, a)], k=4)
            + rng.choices(FILLER, k=3)
        )
        rng.shuffle(words)
        text = " ".join(words)
        lines.append(f"{text}\t{a}\t{s}" if labeled else text)
    return lines


TRAIN_KWARGS = dict(
    min_count=2,
    dim=12,
    embed_epochs=3,
    pretrain_epochs=2,
    selftrain_epochs=2,
    seed=5,
)
