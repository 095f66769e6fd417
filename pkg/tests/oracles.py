"""Independent reference computations used as test oracles.

Deliberately naive: plain nested loops over indices and integers, no
imports from the package under test.
"""

FIXTURES = __import__("pathlib").Path(__file__).resolve().parent.parent / "fixtures"


def brute_infer(rules, observations):
    """rules: list of (antecedent_rows, consequent_row); observations: list of rows."""
    size = len(rules[0][1])
    out = [0] * size
    for antecedents, consequent in rules:
        weight = 15
        for obs, ante in zip(observations, antecedents):
            alpha = 0
            for j in range(size):
                m = obs[j] if obs[j] < ante[j] else ante[j]
                if m > alpha:
                    alpha = m
            if alpha < weight:
                weight = alpha
        for j in range(size):
            v = weight if weight < consequent[j] else consequent[j]
            if v > out[j]:
                out[j] = v
    return out


def bits_of(grade):
    return [int(c) for c in format(grade, "04b")]


def bit_string(grades):
    return "".join(format(g, "04b") for g in grades)


def hand_pack(bitstring):
    bitstring += "0" * (-len(bitstring) % 8)
    return bytes(int(bitstring[i:i + 8], 2) for i in range(0, len(bitstring), 8))
