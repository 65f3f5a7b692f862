"""Generate a Nim corpus, look at its statistics, and train the tokenizer on it."""
from boardlm.corpus import GenConfig, gen_nim_corpus, read_records
from boardlm.tokenizer import tokenize, train_wordpiece

stats = gen_nim_corpus(GenConfig(games=3000, seed=0, q_episodes=50_000), "nim3k.txt")
print(stats.to_json())

lines = read_records("nim3k.txt")
print(lines[:5])

vocab = train_wordpiece(lines)
print(len(vocab), "tokens")
print(vocab.tokens)

ids = tokenize(vocab, "a10/b10/c10 G - [MASK]")
print(ids, [vocab.tokens[i] for i in ids])
