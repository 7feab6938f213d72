import pytest
import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers
from transformers import OPTConfig, OPTForCausalLM, PreTrainedTokenizerFast

from lmsidecar.scoring import ScoringModel

# text only seeds the BPE merges; the model weights are random anyway
TRAINING_TEXT = [
    "do you realize I've never actually seen him at the office?",
    "my brother thinks partners should always choose the former alternative",
    "she said that the meeting went well yesterday.",
    "I guess we should leave before the storm hits.",
    "Have you forgotten that republicans openly admitted that their #1 priority was giving him a fight?",
    "the report that he filed confirms that the numbers were wrong.",
    "yeah, that, and I think they got a lower rent price compared to the renewal downtown",
    "He's smart enough to know that you are a good catch.",
    "Christ, I keep forgetting you guys don't have the right to speak broadly of revolution.",
    "we left early (around noon) so that we could catch the train.",
    "I think there is a problem with the new schedule.",
    "the weather was lovely all weekend long. Ann is on the team that lost.",
]


def build_tiny_model(target_dir: str, seed: int = 0) -> str:
    """A 2-layer seeded causal LM + byte-level BPE tokenizer, saved to disk."""
    tok = Tokenizer(models.BPE(unk_token=None))
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    tok.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(
        vocab_size=360,
        special_tokens=["<pad>", "</s>"],
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
    )
    tok.train_from_iterator(TRAINING_TEXT, trainer)
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, bos_token="</s>", eos_token="</s>", pad_token="<pad>"
    )
    torch.manual_seed(seed)
    config = OPTConfig(
        vocab_size=len(fast),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        ffn_dim=64,
        max_position_embeddings=64,
        word_embed_proj_dim=32,
        bos_token_id=fast.bos_token_id,
        eos_token_id=fast.eos_token_id,
        pad_token_id=fast.pad_token_id,
    )
    model = OPTForCausalLM(config)
    model.eval()
    model.save_pretrained(target_dir)
    fast.save_pretrained(target_dir)
    return str(target_dir)


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    return build_tiny_model(tmp_path_factory.mktemp("tiny-model"))


@pytest.fixture(scope="session")
def scoring_model(tiny_model_dir):
    return ScoringModel(tiny_model_dir)
