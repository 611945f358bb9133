import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import BartConfig, BartForConditionalGeneration, PreTrainedTokenizerFast

# A miniature randomly-initialized encoder-decoder: big enough to exercise
# the full protocol path, small enough to build offline in seconds.
VOCAB_WORDS = (
    "<s> </s> <pad> <unk> [SQL] [logic] ( ) , ; { } the a of in to that have "
    "belongs grouped by ordered limited equal larger smaller than at least "
    "most number maximum minimum average sum all items age dogs cats price "
    "products weight parcels language spanish percentage countrycode "
    "countrylanguage what is how many total largest smallest not none every "
    "majority 0 1 2 3 5 17 300 3000 eq count max min avg filter_greater "
    "all_rows hop select from where and or"
).split()


def build_tiny_models(target_dir) -> str:
    vocab = {word: i for i, word in enumerate(VOCAB_WORDS)}
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        bos_token="<s>",
        eos_token="</s>",
        pad_token="<pad>",
        unk_token="<unk>",
    )
    fast.save_pretrained(target_dir)
    config = BartConfig(
        vocab_size=len(vocab),
        d_model=32,
        encoder_layers=1,
        decoder_layers=1,
        encoder_attention_heads=2,
        decoder_attention_heads=2,
        encoder_ffn_dim=64,
        decoder_ffn_dim=64,
        max_position_embeddings=128,
        pad_token_id=vocab["<pad>"],
        bos_token_id=vocab["<s>"],
        eos_token_id=vocab["</s>"],
        decoder_start_token_id=vocab["<s>"],
        forced_eos_token_id=vocab["</s>"],
    )
    torch.manual_seed(0)
    model = BartForConditionalGeneration(config)
    model.save_pretrained(target_dir)
    return str(target_dir)


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    return build_tiny_models(tmp_path_factory.mktemp("tiny_model"))
