"""Exercises the signrec_py extension module end to end.

Build first, e.g. `pip install --no-build-isolation -e crates/python`, then run
`python crates/python/python/smoke_test.py`.
"""

import json
import math
import tempfile
from pathlib import Path

import signrec_py as sr


def main():
    rows = [[math.log(0.4), math.log(0.6)]] * 3
    loss, grad = sr.ctc_loss(rows, [0])
    assert abs(loss + math.log(0.688)) < 1e-12, loss
    assert len(grad) == 3 and len(grad[0]) == 2
    assert sr.greedy_decode(rows) == []
    assert sr.beam_decode(rows, 8)[0][0] == [0]
    assert sr.diagnose(rows, [0], beam_size=1).verdict == "SearchAtFault"
    assert sr.diagnose(rows, [0], beam_size=8).verdict == "Correct"

    a = sr.edit_alignment([0, 1, 2], [0, 2])
    assert (a.substitutions, a.deletions, a.insertions) == (0, 1, 0)
    assert sr.wer([([0, 1, 2], [0, 2])]) == 33.3

    vocab = sr.Vocabulary(["RAIN", "SUN"])
    assert len(vocab) == 2 and vocab.blank == 2
    assert vocab.decode(vocab.encode(["SUN", "RAIN"])) == ["SUN", "RAIN"]

    img = sr.rasterize_hand([(0.3 + 0.02 * i, 0.5) for i in range(21)], 16)
    assert len(img) == 16 and any(any(r) for r in img)

    with tempfile.TemporaryDirectory() as tmp:
        spec = {"vocab_size": 3, "train_sentences": 4, "dev_sentences": 2, "test_sentences": 2, "write_frames": False}
        glosses = sr.generate_corpus(tmp, json.dumps(spec))
        assert len(glosses) == 3
        first = json.loads((Path(tmp) / "train.jsonl").read_text().splitlines()[0])
        left, right = sr.extract_cues(str(Path(tmp) / first["landmarks"]), 32)
        images, displacement, location = left
        assert len(images) == len(displacement) == len(location) > 0
        assert all(abs(sum(row) - 1.0) < 1e-6 or sum(row) == 0 for row in location)

    try:
        sr.ctc_loss([[0.0, 0.0], [0.0]], [])
    except ValueError:
        pass
    else:
        raise AssertionError("ragged logits accepted")

    print("signrec_py smoke test passed")


if __name__ == "__main__":
    main()
