#!/usr/bin/env python3
"""Regenerates the binary and JSON fixtures under tests/data.

Oracles: the Hugging Face BERT tokenizer for WordPiece, onnxruntime for
single-operator models, and PyTorch for the toy three-head encoder.

    python3 tools/gen_fixtures.py [--out tests/data]
"""

import argparse
import collections
import json
import pathlib
import shutil

import numpy as np
import onnx
import onnxruntime as ort
import torch
from onnx import TensorProto, helper, numpy_helper
from transformers import BertConfig, BertModel, BertTokenizer

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]

CORPUS = [
    "Москва является столицей России.",
    "Столица России находится в Москве, на реке Москве.",
    "Кот сидел на ковре и смотрел в окно.",
    "Собака спала у двери весь день.",
    "В 1998 г. компания открыла офис на ул. Ленина.",
    "Т.е. результат был получен др. методом.",
    "Ёжик в тумане искал лошадку.",
    "Мой друг купил новый автомобиль вчера.",
    "Погода сегодня солнечная и тёплая.",
    "Он не пришёл на встречу, потому что заболел.",
    "The cat sat on the mat.",
    "Dr. Smith arrived at 5 p.m. yesterday.",
    "Prices rose by 3.5% in March.",
    "Hello, world! How are you?",
    "Научные статьи публикуются в журналах каждый месяц.",
    "Исследователи представили новую метрику для оценки фактической согласованности.",
]

TOKENIZER_CASES = [
    "Привет, мир!",
    "Москва является столицей России.",
    "ЁЖИК В ТУМАНЕ",
    "Café naïve résumé",
    "Йошкар-Ола и Йемен",
    "В 1998 г. открыли офис.",
    "don't stop-believing...",
    "中文字符 и русский текст",
    "tabs\tand\nnewlines  and   spaces",
    " nbsp em space​zero width",
    "контроль\x07символов\x00",
    "неизвестныеслова кракозябры",
    "a" * 120,
    "Научные статьи публикуются",
    "",
    "   ",
    "emoji 🙂 test",
    "«Кавычки» и — тире",
]

PAIR_CASES = [
    ("Москва является столицей России.", "Столица России Москва.", 64),
    ("Кот сидел на ковре и смотрел в окно. Собака спала у двери.", "Кот сидел.", 12),
    ("Погода сегодня солнечная.", "Погода.", 8),
]


def basic_words(text, lower):
    tok = BertTokenizer(vocab=str(_bootstrap_vocab()), do_lower_case=lower)
    return tok.backend_tokenizer.pre_tokenizer.pre_tokenize_str(tok.backend_tokenizer.normalizer.normalize_str(text))


_BOOT = pathlib.Path("/tmp/alignru_boot_vocab.txt")


def _bootstrap_vocab():
    _BOOT.write_text("\n".join(SPECIALS) + "\n", encoding="utf-8")
    return _BOOT


def build_vocab(path, lower):
    counts = collections.Counter()
    chars = set()
    for line in CORPUS + TOKENIZER_CASES[:6]:
        for word, _ in basic_words(line, lower):
            counts[word] += 1
            chars.update(word)
    vocab = list(SPECIALS)
    for c in sorted(chars):
        vocab += [c, "##" + c]
    suffixes = collections.Counter()
    for word in counts:
        for n in (2, 3, 4):
            if len(word) > n + 1:
                suffixes["##" + word[-n:]] += 1
    for word, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:120]:
        if word not in vocab:
            vocab.append(word)
    for suffix, c in sorted(suffixes.items(), key=lambda kv: (-kv[1], kv[0])):
        if c >= 2 and suffix not in vocab:
            vocab.append(suffix)
    # Stems: word prefixes, so greedy longest match has work to do.
    for word in sorted(counts):
        if len(word) > 5 and word[:4] not in vocab:
            vocab.append(word[:4])
    path.write_text("\n".join(vocab) + "\n", encoding="utf-8")
    return vocab


def gen_wordpiece(out):
    d = out / "wordpiece"
    d.mkdir(parents=True, exist_ok=True)
    cases = []
    for lower, name in ((True, "vocab_lower.txt"), (False, "vocab_cased.txt")):
        build_vocab(d / name, lower)
        tok = BertTokenizer(vocab=str(d / name), do_lower_case=lower)
        for text in TOKENIZER_CASES:
            cases.append({
                "vocab": name,
                "lower": lower,
                "text": text,
                "tokens": tok.tokenize(text),
                "ids": tok.encode(text, add_special_tokens=False),
            })
        for context, claim, max_len in PAIR_CASES:
            enc = tok(context, claim, truncation="only_first", max_length=max_len)
            cases.append({
                "vocab": name,
                "lower": lower,
                "context": context,
                "claim": claim,
                "max_length": max_len,
                "input_ids": enc["input_ids"],
                "token_type_ids": enc["token_type_ids"],
            })
    (d / "cases.json").write_text(json.dumps(cases, ensure_ascii=False, indent=1), encoding="utf-8")


# --- single-operator models -------------------------------------------------

NP_TO_ONNX = {
    np.dtype("float32"): TensorProto.FLOAT,
    np.dtype("float64"): TensorProto.DOUBLE,
    np.dtype("int64"): TensorProto.INT64,
    np.dtype("int32"): TensorProto.INT32,
    np.dtype("bool"): TensorProto.BOOL,
    np.dtype("uint8"): TensorProto.UINT8,
    np.dtype("int8"): TensorProto.INT8,
}


def tensor_json(a):
    a = np.asarray(a)
    values = a.reshape(-1).tolist()
    if a.dtype == np.bool_:
        values = [int(v) for v in values]
    elif a.dtype.kind == "f":
        # Strict JSON has no NaN or Infinity literals.
        values = [v if np.isfinite(v) else str(v) for v in values]
    return {"dtype": int(NP_TO_ONNX[a.dtype]), "shape": list(a.shape), "data": values}


class OpCases:
    def __init__(self, out):
        self.dir = out / "ops"
        if self.dir.exists():
            shutil.rmtree(self.dir)
        self.dir.mkdir(parents=True)
        self.cases = []
        self.rng = np.random.default_rng(7)

    def add(self, name, op, inputs, attrs=None, n_outputs=1, consts=None, opset=17):
        """inputs: list of (name, array or None); consts become initializers."""
        consts = consts or {}
        node_inputs = [n if a is not None or n in consts else "" for n, a in inputs]
        outputs = [f"y{i}" for i in range(n_outputs)]
        node = helper.make_node(op, node_inputs, outputs, **(attrs or {}))
        graph_inputs = [
            helper.make_tensor_value_info(n, NP_TO_ONNX[a.dtype], list(a.shape))
            for n, a in inputs if a is not None and n not in consts
        ]
        inits = [numpy_helper.from_array(np.asarray(v), n) for n, v in consts.items()]
        graph = helper.make_graph([node], name, graph_inputs, [helper.make_empty_tensor_value_info(o) for o in outputs],
                                  inits)
        model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", opset)])
        model.ir_version = 8
        inferred = {v.name: v for v in onnx.shape_inference.infer_shapes(model, strict_mode=True).graph.value_info}
        for out in model.graph.output:
            out.type.CopyFrom(inferred[out.name].type)
        path = self.dir / f"{name}.onnx"
        onnx.save(model, path)
        sess = ort.InferenceSession(str(path), providers=["CPUExecutionProvider"])
        feeds = {n: a for n, a in inputs if a is not None and n not in consts}
        results = sess.run(outputs, feeds)
        self.cases.append({
            "name": name,
            "model": path.name,
            "inputs": {n: tensor_json(a) for n, a in feeds.items()},
            "outputs": {o: tensor_json(r) for o, r in zip(outputs, results)},
        })

    def f(self, *shape):
        return self.rng.standard_normal(shape).astype(np.float32)

    def save(self):
        (self.dir / "cases.json").write_text(json.dumps(self.cases, indent=0), encoding="utf-8")


def gen_ops(out):
    c = OpCases(out)
    f = c.f
    i64 = lambda *v: np.array(v, dtype=np.int64)

    c.add("add_broadcast", "Add", [("a", f(2, 3, 4)), ("b", f(3, 1))])
    c.add("sub", "Sub", [("a", f(4, 5)), ("b", f(5))])
    c.add("mul_scalar", "Mul", [("a", f(3, 2)), ("b", np.array(2.5, dtype=np.float32))])
    c.add("div", "Div", [("a", f(2, 3)), ("b", np.abs(f(2, 3)) + 0.5)])
    c.add("div_int", "Div", [("a", i64(7, -7, 9, 10)), ("b", i64(2, 2, -4, 3))])
    c.add("pow", "Pow", [("a", np.abs(f(6)) + 0.1), ("b", np.array([2.0], dtype=np.float32))])
    c.add("sqrt", "Sqrt", [("a", np.abs(f(5)))])
    c.add("erf", "Erf", [("a", f(3, 7))])
    c.add("tanh", "Tanh", [("a", f(10))])
    c.add("sigmoid", "Sigmoid", [("a", f(10) * 10)])
    c.add("exp", "Exp", [("a", f(8))])
    c.add("relu", "Relu", [("a", f(8))])
    c.add("neg", "Neg", [("a", f(4))])
    c.add("equal", "Equal", [("a", i64(1, 2, 3, 4)), ("b", i64(1, 0, 3, 5))])
    c.add("greater_or_equal", "GreaterOrEqual", [("a", f(3, 3)), ("b", f(3))])
    c.add("less", "Less", [("a", f(6)), ("b", f(6))])
    c.add("and", "And", [("a", np.array([True, True, False, False])), ("b", np.array([True, False, True, False]))])
    c.add("not", "Not", [("a", np.array([True, False]))])
    c.add("isnan", "IsNaN", [("a", np.array([1.0, np.nan, np.inf, 0.0], dtype=np.float32))])
    c.add("where", "Where", [("c", np.array([[True], [False]])), ("a", f(2, 3)), ("b", f(3))])
    c.add("cast_f2i", "Cast", [("a", f(6) * 5)], {"to": TensorProto.INT64})
    c.add("cast_i2f", "Cast", [("a", i64(1, -2, 3))], {"to": TensorProto.FLOAT})
    c.add("cast_b2f", "Cast", [("a", np.array([True, False, True]))], {"to": TensorProto.FLOAT})
    c.add("cast_f2b", "Cast", [("a", np.array([0.0, 0.5, -1.0], dtype=np.float32))], {"to": TensorProto.BOOL})

    c.add("matmul_2d", "MatMul", [("a", f(4, 6)), ("b", f(6, 3))])
    c.add("matmul_batched", "MatMul", [("a", f(2, 3, 4, 5)), ("b", f(2, 3, 5, 2))])
    c.add("matmul_broadcast", "MatMul", [("a", f(2, 4, 5)), ("b", f(5, 3))])
    c.add("matmul_bcast_batch", "MatMul", [("a", f(1, 3, 4, 5)), ("b", f(2, 1, 5, 2))])
    c.add("matmul_vec_left", "MatMul", [("a", f(5)), ("b", f(2, 5, 3))])
    c.add("matmul_vec_right", "MatMul", [("a", f(2, 4, 5)), ("b", f(5))])
    c.add("gemm", "Gemm", [("a", f(3, 4)), ("b", f(5, 4)), ("c", f(5))], {"transB": 1, "alpha": 0.5, "beta": 2.0})
    c.add("gemm_transa", "Gemm", [("a", f(4, 3)), ("b", f(4, 2))], {"transA": 1})
    c.add("softmax", "Softmax", [("a", f(2, 3, 5))], {"axis": 1})
    c.add("softmax_last", "Softmax", [("a", f(2, 3, 5) * 20)])
    c.add("softmax_v11", "Softmax", [("a", f(2, 3, 4))], {"axis": 1}, opset=11)
    c.add("log_softmax", "LogSoftmax", [("a", f(3, 4))])
    c.add("layernorm", "LayerNormalization", [("x", f(2, 3, 8)), ("s", f(8)), ("b", f(8))], {"epsilon": 1e-12})
    c.add("layernorm_axis", "LayerNormalization", [("x", f(2, 3, 4)), ("s", f(3, 4))], {"axis": 1},
          n_outputs=3)
    c.add("reduce_mean", "ReduceMean", [("a", f(2, 3, 4))], {"axes": [-1]}, opset=17)
    c.add("reduce_mean_all", "ReduceMean", [("a", f(2, 3))], {"keepdims": 0})
    c.add("reduce_mean_v18", "ReduceMean", [("a", f(2, 3, 4)), ("axes", i64(0, 2))], opset=18,
          consts={"axes": i64(0, 2)})
    c.add("reduce_sum", "ReduceSum", [("a", f(2, 3, 4)), ("axes", i64(1))], {"keepdims": 0})
    c.add("reduce_max", "ReduceMax", [("a", f(3, 5))], {"axes": [0]})
    c.add("argmax", "ArgMax", [("a", f(3, 5))], {"axis": 1, "keepdims": 0})

    c.add("reshape", "Reshape", [("a", f(2, 3, 4)), ("s", i64(0, -1, 2))])
    c.add("flatten", "Flatten", [("a", f(2, 3, 4))], {"axis": 2})
    c.add("transpose", "Transpose", [("a", f(2, 3, 4))], {"perm": [2, 0, 1]})
    c.add("transpose_default", "Transpose", [("a", f(2, 3))])
    c.add("concat", "Concat", [("a", f(2, 3)), ("b", f(2, 1)), ("c", f(2, 2))], {"axis": -1})
    c.add("unsqueeze", "Unsqueeze", [("a", f(3, 4)), ("axes", i64(0, -1))])
    c.add("unsqueeze_v11", "Unsqueeze", [("a", f(3, 4))], {"axes": [1]}, opset=11)
    c.add("squeeze", "Squeeze", [("a", f(1, 3, 1)), ("axes", i64(2))])
    c.add("squeeze_all", "Squeeze", [("a", f(1, 3, 1))])
    c.add("shape", "Shape", [("a", f(2, 3, 4))])
    c.add("shape_slice", "Shape", [("a", f(2, 3, 4))], {"start": 1, "end": -1}, opset=15)
    c.add("gather", "Gather", [("a", f(5, 3)), ("i", i64(0, 4, -1, 2).reshape(2, 2))])
    c.add("gather_axis1", "Gather", [("a", f(2, 4, 3)), ("i", np.array(1, dtype=np.int64))], {"axis": 1})
    c.add("slice", "Slice", [("a", f(4, 6)), ("s", i64(1, -5)), ("e", i64(100, -1)), ("ax", i64(0, 1)),
                             ("st", i64(2, 1))])
    c.add("slice_neg_step", "Slice", [("a", f(6)), ("s", i64(-1)), ("e", i64(-100)), ("ax", i64(0)),
                                      ("st", i64(-2))])
    c.add("split", "Split", [("a", f(6, 2)), ("s", i64(2, 4))], n_outputs=2)
    c.add("expand", "Expand", [("a", f(3, 1)), ("s", i64(2, 1, 4))])
    c.add("tile", "Tile", [("a", f(2, 3)), ("r", i64(2, 1))])
    c.add("constant_of_shape", "ConstantOfShape", [("s", i64(2, 3))],
          {"value": numpy_helper.from_array(np.array([1], dtype=np.int64))})
    c.add("range", "Range", [("s", np.array(0, dtype=np.int64)), ("l", np.array(7, dtype=np.int64)),
                             ("d", np.array(2, dtype=np.int64))])
    c.add("range_float", "Range", [("s", np.array(1.0, dtype=np.float32)), ("l", np.array(0.0, dtype=np.float32)),
                                   ("d", np.array(-0.25, dtype=np.float32))])
    c.add("cumsum", "CumSum", [("a", f(3, 4)), ("ax", np.array(1, dtype=np.int64))])
    c.add("identity", "Identity", [("a", f(3))])
    c.add("constant", "Constant", [], {"value": numpy_helper.from_array(f(2, 2), "v")})
    c.add("clip", "Clip", [("a", f(8)), ("lo", np.array(-0.5, dtype=np.float32)), ("hi", np.array(0.5, dtype=np.float32))])
    c.add("max", "Max", [("a", f(3)), ("b", f(3)), ("c", f(1))])
    c.save()


# --- toy three-head encoder -------------------------------------------------

class ThreeHead(torch.nn.Module):
    def __init__(self, config):
        super().__init__()
        self.encoder = BertModel(config, add_pooling_layer=False)
        h = config.hidden_size
        self.head3 = torch.nn.Linear(h, 3)
        self.head_bin = torch.nn.Linear(h, 1)
        self.head_reg = torch.nn.Linear(h, 1)
        for head in (self.head3, self.head_bin, self.head_reg):
            torch.nn.init.normal_(head.weight, std=0.2)

    def forward(self, input_ids, attention_mask, token_type_ids):
        hidden = self.encoder(input_ids=input_ids, attention_mask=attention_mask,
                              token_type_ids=token_type_ids).last_hidden_state
        first = hidden[:, 0]
        probs3 = torch.softmax(self.head3(first), dim=-1)
        prob_bin = torch.sigmoid(self.head_bin(first)).squeeze(-1)
        regression = torch.sigmoid(self.head_reg(first)).squeeze(-1)
        return probs3, prob_bin, regression


TOY_PAIRS = [
    ("Москва является столицей России.", "Столица России Москва."),
    ("Кот сидел на ковре и смотрел в окно.", "Собака спала у двери."),
    ("Погода сегодня солнечная и тёплая.", "Погода сегодня холодная."),
    ("The cat sat on the mat.", "Hello, world!"),
    ("Научные статьи публикуются в журналах каждый месяц. Исследователи представили новую метрику.",
     "Исследователи представили метрику."),
    ("Он не пришёл на встречу, потому что заболел. " * 6, "Он заболел."),
]


def gen_toy(out):
    d = out / "toy"
    if d.exists():
        shutil.rmtree(d)
    d.mkdir(parents=True)
    vocab = build_vocab(d / "vocab.txt", True)
    torch.manual_seed(0)
    config = BertConfig(vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=64, max_position_embeddings=64, type_vocab_size=2,
                        hidden_act="gelu", initializer_range=0.2, attn_implementation="eager")
    model = ThreeHead(config).eval()
    tok = BertTokenizer(vocab=str(d / "vocab.txt"), do_lower_case=True)
    max_len = 48

    names = ["input_ids", "attention_mask", "token_type_ids"]
    sample = tok(["a b", "c d e"], ["x", "y"], padding=True, return_tensors="pt")
    dynamic = {n: {0: "batch", 1: "seq"} for n in names}
    dynamic.update({"probs3": {0: "batch"}, "prob_bin": {0: "batch"}, "regression": {0: "batch"}})
    exports = {"model.onnx": 17, "model_v11.onnx": 11}
    for filename, opset in exports.items():
        torch.onnx.export(model, tuple(sample[n] for n in names), d / filename, input_names=names,
                          output_names=["probs3", "prob_bin", "regression"], dynamic_axes=dynamic,
                          opset_version=opset, dynamo=False)
        sidecar = {"max_input_tokens": max_len, "vocab": "vocab.txt", "do_lower_case": True,
                   "vocab_size": len(vocab)}
        (d / (filename + ".json")).write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")

    # A model lacking the regression head, for load-failure tests.
    broken = onnx.load(d / "model.onnx")
    keep = [o for o in broken.graph.output if o.name != "regression"]
    del broken.graph.output[:]
    broken.graph.output.extend(keep)
    onnx.save(broken, d / "no_regression.onnx")
    (d / "no_regression.onnx.json").write_text(json.dumps(
        {"max_input_tokens": max_len, "vocab": "vocab.txt", "do_lower_case": True}) + "\n", encoding="utf-8")
    (d / "bad_vocab.onnx.json").write_text(json.dumps(
        {"max_input_tokens": max_len, "vocab": "vocab.txt", "do_lower_case": True,
         "vocab_size": len(vocab) + 1}) + "\n", encoding="utf-8")
    shutil.copy(d / "model.onnx", d / "bad_vocab.onnx")

    expected = []
    sess = ort.InferenceSession(str(d / "model.onnx"), providers=["CPUExecutionProvider"])
    with torch.no_grad():
        for context, claim in TOY_PAIRS:
            enc = tok(context, claim, truncation="only_first", max_length=max_len, return_tensors="pt")
            p3, pb, rg = model(*(enc[n] for n in names))
            ort_out = sess.run(None, {n: enc[n].numpy() for n in names})
            expected.append({
                "context": context,
                "claim": claim,
                "input_ids": enc["input_ids"][0].tolist(),
                "probs3": p3[0].tolist(),
                "prob_bin": float(pb[0]),
                "regression": float(rg[0]),
                "ort_probs3": ort_out[0][0].tolist(),
            })
    (d / "expected.json").write_text(json.dumps(expected, ensure_ascii=False, indent=1), encoding="utf-8")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=pathlib.Path,
                        default=pathlib.Path(__file__).resolve().parent.parent / "tests" / "data")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    gen_wordpiece(args.out)
    gen_ops(args.out)
    gen_toy(args.out)


if __name__ == "__main__":
    main()
