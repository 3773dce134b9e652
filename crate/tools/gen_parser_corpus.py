#!/usr/bin/env python3
"""Write the malformed-output corpus used by the parser acceptance check.

Every case carries the outcome it must produce: "Valid", or "Invalid" with
the expected failure kind and detail.
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
ORDER = ["Age", "Dose", "Comorbidities", "Contraindications", "Pregnancy", "Lactation", "Warnings", "Genetics"]


def answer(results=None, score=95, overall_key="Overall Suitability", drop=(), extra=None, key_case=str):
    results = results or {}
    obj = {}
    for c in ORDER:
        if c in drop:
            continue
        r = results.get(c, "Suitable")
        obj[key_case(c)] = {"result": r, "reason": "" if r in ("N/A", "NA") else f"{c} considerations reviewed"}
    if overall_key is not None:
        obj[overall_key] = {"score": score, "reason": "Overall acceptable"}
    if extra:
        obj.update(extra)
    return obj


def dumps(obj, indent=2):
    return json.dumps(obj, indent=indent)


VALID = {"status": "Valid"}


def invalid(kind, detail=None):
    out = {"status": "Invalid", "kind": kind}
    if detail is not None:
        out["detail"] = detail
    return out


def cases():
    base = dumps(answer())
    yield "plain", base, VALID
    yield "compact", json.dumps(answer()), VALID
    yield "fenced_json", f"```json\n{base}\n```", VALID
    yield "fenced_bare", f"```\n{base}\n```", VALID
    yield "prose_preamble", f"Here is my assessment:\n{base}", VALID
    yield "prose_both_sides", f"Here is my assessment: {base} Hope this helps!", VALID
    yield "lowercase_keys", dumps(answer(key_case=str.lower)), VALID
    yield "uppercase_keys", dumps(answer(key_case=str.upper)), VALID
    yield "padded_keys", dumps(answer(key_case=lambda k: f"  {k} ")), VALID
    yield "overall_no_space", dumps(answer(overall_key="OverallSuitability")), VALID
    yield "overall_lowercase", dumps(answer(overall_key="overall suitability")), VALID
    yield "score_string", dumps(answer(score="80")), VALID
    yield "score_zero", dumps(answer(score=0)), VALID
    yield "score_hundred", dumps(answer(score=100)), VALID
    yield "score_fraction", dumps(answer(score=72.4)), VALID
    yield "result_lowercase", dumps(answer({"Age": "suitable", "Dose": "risky"})), VALID
    yield "na_slash", dumps(answer({"Pregnancy": "N/A", "Lactation": "N/A"})), VALID
    yield "na_plain", dumps(answer({"Pregnancy": "NA"})), VALID
    yield "na_lower", dumps(answer({"Lactation": "n/a"})), VALID
    yield "na_words", dumps(answer({"Genetics": "Not Applicable"})), VALID
    yield "extra_keys", dumps(answer(extra={"Notes": "none", "Model": "x"})), VALID
    yield "brace_in_reason", json.dumps({**answer(), "Age": {"result": "Risky", "reason": "see {section} 4.2 }"}}), VALID
    yield "escaped_quote_in_reason", json.dumps({**answer(), "Dose": {"result": "Risky", "reason": "halve the \"loading\" dose {"}}), VALID
    yield "two_objects_first_wins", f"{base}\n\nAlternatively: {{\"Age\": 1}}", VALID
    yield "preamble_with_stray_close", f"Result }} below:\n{base}", VALID

    yield "empty", "", invalid("NoJsonFound")
    yield "whitespace_only", "   \n\t ", invalid("NoJsonFound")
    yield "prose_only", "I cannot assess this prescription without more information.", invalid("NoJsonFound")
    # the outer object never closes, so repair lands on the first complete inner one
    yield "truncated", base[: len(base) // 2], invalid("MissingClass", "Age")
    yield "truncated_in_string", base[: base.index("considerations") + 5], invalid("NoJsonFound")
    yield "array_wrapped", json.dumps([answer()]), VALID
    yield "json_string_only", json.dumps("Suitable overall"), invalid("NoJsonFound")
    yield "single_quotes", base.replace('"', "'"), invalid("NoJsonFound")
    yield "trailing_comma", base[:-2] + ",\n}", invalid("NoJsonFound")
    yield "missing_genetics", dumps(answer(drop=("Genetics",))), invalid("MissingClass", "Genetics")
    yield "missing_age", dumps(answer(drop=("Age",))), invalid("MissingClass", "Age")
    yield "missing_overall", dumps(answer(overall_key=None)), invalid("MissingClass", "Overall Suitability")
    yield "fenced_missing_warnings", f"```json\n{dumps(answer(drop=('Warnings',)))}\n```", invalid("MissingClass", "Warnings")
    yield "score_over", dumps(answer(score=120)), invalid("ScoreOutOfRange")
    yield "score_negative", dumps(answer(score=-5)), invalid("ScoreOutOfRange")
    yield "score_word", dumps(answer(score="high")), invalid("ScoreOutOfRange")
    yield "score_percent_string", dumps(answer(score="85%")), invalid("ScoreOutOfRange")
    yield "score_null", dumps(answer(score=None)), invalid("ScoreOutOfRange")
    yield "result_maybe", dumps(answer({"Warnings": "Maybe"})), invalid("UnknownResultValue", "Maybe")
    yield "result_caution", dumps(answer({"Dose": "Caution"})), invalid("UnknownResultValue", "Caution")
    yield "result_number", json.dumps({**answer(), "Age": {"result": 1, "reason": "x"}}), invalid("UnknownResultValue", "1")
    yield "duplicate_age", '{"Age": {"result": "Suitable", "reason": "ok"}, ' + base[1:], invalid("DuplicateClass", "Age")
    yield "duplicate_case_insensitive", '{"age": {"result": "Risky", "reason": "old"}, ' + base[1:], invalid("DuplicateClass", "Age")
    yield "duplicate_overall", base[:-1] + ', "OverallSuitability": {"score": 10, "reason": "x"}}', invalid("DuplicateClass", "Overall Suitability")
    yield "missing_reason", json.dumps({**answer(), "Warnings": {"result": "Risky"}}), invalid("MissingReason", "Warnings")


def main():
    out = [{"name": n, "raw": raw, "expect": e} for n, raw, e in cases()]
    assert len(out) == 50, len(out)
    assert len({c["name"] for c in out}) == 50
    path = ROOT / "fixtures" / "golden" / "parser_corpus.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(f"{len(out)} cases")


if __name__ == "__main__":
    main()
