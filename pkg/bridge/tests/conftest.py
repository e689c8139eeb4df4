import random

import pytest

VOCAB_WORDS = [
    "apple", "orchard", "fruit", "harvest", "municipal", "budget", "council",
    "meeting", "city", "snow", "winter", "road", "garden", "tomato", "recipe",
    "river", "bridge", "market", "festival", "season",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """A real (random-weight) seq2seq checkpoint on disk: word-level fast
    tokenizer plus a 2-layer model, loadable through the standard path.

    Built locally because this environment has no route to published
    checkpoints; it exercises the identical tokenizer/model/batching code.
    """
    import torch
    from tokenizers import Tokenizer, models, pre_tokenizers, trainers
    from transformers import PreTrainedTokenizerFast, T5Config, T5ForConditionalGeneration

    training_text = [
        "yes no true false",
        "Determine if passage B is as relevant as passage A .",
        "Passage A : Passage B : Query : Is passage B as relevant as passage A ?",
        "Query : Document0 : Document1 : Relevant :",
        " ".join(VOCAB_WORDS),
    ]
    tok = Tokenizer(models.WordLevel(unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    trainer = trainers.WordLevelTrainer(vocab_size=512, special_tokens=["<pad>", "</s>", "<unk>"])
    tok.train_from_iterator(training_text, trainer)
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        pad_token="<pad>",
        eos_token="</s>",
        unk_token="<unk>",
        model_max_length=256,
    )
    torch.manual_seed(0)
    config = T5Config(
        vocab_size=tokenizer.vocab_size + 8,
        d_model=32,
        d_ff=64,
        d_kv=8,
        num_layers=2,
        num_heads=4,
        decoder_start_token_id=tokenizer.pad_token_id,
        pad_token_id=tokenizer.pad_token_id,
        eos_token_id=tokenizer.eos_token_id,
    )
    model = T5ForConditionalGeneration(config)
    path = tmp_path_factory.mktemp("checkpoint")
    tokenizer.save_pretrained(path)
    model.save_pretrained(path)
    return str(path)


@pytest.fixture()
def random_tasks():
    from duo_bridge.protocol import ScoringTask

    rng = random.Random(17)

    def make(n, seed=None):
        local = random.Random(seed) if seed is not None else rng
        tasks = []
        for i in range(n):
            words = lambda k: " ".join(local.choices(VOCAB_WORDS, k=k))
            tasks.append(
                ScoringTask(
                    id=f"t{i:03d}",
                    query=words(local.randint(2, 5)),
                    passage_a=words(local.randint(8, 30)),
                    passage_b=words(local.randint(8, 30)),
                )
            )
        return tasks

    return make
