"""Independent oracle for the B4T split at 2015.1 on tests/fixtures/small.

Rebuilds the split from the definitions with plain Python and writes the
golden train/test/exclusion files. Run from this directory.
"""
import csv
import os

FIX = os.path.join("..", "fixtures", "small")
T = (2015, 1)
LO, HI = (2012, 1), (2016, 2)
MINI = {"S1": 2}


def parse(text):
    y, k = text.split(".")
    return (int(y), MINI[k] if k in MINI else int(k))


def nxt(t):
    return (t[0], 2) if t[1] == 1 else (t[0] + 1, 1)


def fmt(x):
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


students = {}
with open(os.path.join(FIX, "students.csv")) as f:
    for r in csv.DictReader(f):
        students[r["student_id"]] = {
            "entrance": parse(r["entrance_term"]),
            "status": r["status"],
            "exit": parse(r["exit_term"]) if r["exit_term"] else None,
            "attrs": [float(r["age"]), float(r["scholarship"])],
            "courses": [],
        }
with open(os.path.join(FIX, "courses.csv")) as f:
    for r in csv.DictReader(f):
        students[r["student_id"]]["courses"].append(
            (parse(r["term"]), float(r["score"]), float(r["attendance_pct"]), r["result"] == "1")
        )
for s in students.values():
    s["courses"].sort(key=lambda c: c[0])


def vector(s, t):
    w = [c for c in s["courses"] if c[0] < t]
    n = len(w)
    return s["attrs"] + [
        len({c[0] for c in w}),
        n,
        sum(1 for c in w if not c[3]),
        sum(c[2] for c in w) / n,
        sum(c[1] for c in w) / n,
    ]


def label(s):
    return 0 if s["status"] == "dropout" else 1


train, test, excl = [], [], []
for sid in sorted(students):
    s = students[sid]
    if s["exit"] is None:
        continue
    start = s["entrance"]
    if LO <= s["exit"] < T:
        if not s["courses"]:
            excl.append((sid, "train", "empty_history"))
            continue
        last = s["courses"][-1][0]
        if last <= start:
            excl.append((sid, "train", "single_term"))
            continue
        t = nxt(start)
        while t <= nxt(last):
            if any(c[0] < t for c in s["courses"]):
                train.append((sid, t, vector(s, t), label(s)))
            t = nxt(t)
    elif start <= T and T <= s["exit"] <= HI:
        if not s["courses"]:
            excl.append((sid, "test", "empty_history"))
        elif T <= start:
            excl.append((sid, "test", "starts_at_reference"))
        elif T > nxt(s["courses"][-1][0]):
            excl.append((sid, "test", "inactive_at_reference"))
        else:
            test.append((sid, T, vector(s, T), label(s)))

header = "age,scholarship,completed_terms,courses_taken,courses_failed,mean_attendance,mean_score,label\n"
for name, rows in [("train.csv", train), ("test.csv", test)]:
    with open(os.path.join("split_B4T_2015.1", name), "w") as f:
        f.write(header)
        for _, _, v, y in rows:
            f.write(",".join(fmt(x) for x in v) + f",{y}\n")
with open(os.path.join("split_B4T_2015.1", "provenance.csv"), "w") as f:
    f.write("student_id,as_of,role\n")
    for role, rows in [("train", train), ("test", test)]:
        for sid, t, _, _ in rows:
            f.write(f"{sid},{t[0]}.{t[1]},{role}\n")
excl.sort(key=lambda e: (e[1] != "train", e[0]))
with open(os.path.join("split_B4T_2015.1", "exclusions.csv"), "w") as f:
    f.write("student_id,role,reason\n")
    for e in excl:
        f.write(",".join(e) + "\n")
