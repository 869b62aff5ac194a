# from transformers import AutoModel
# model = AutoModel.from_pretrained("gpt2")
EXAMPLE = """
from transformers import AutoModel
AutoModel.from_pretrained("gpt2")
"""


def show():
    print("Call from_pretrained( to load a model from transformers")
    return EXAMPLE
