"""Collects one line per acceptance criterion; printed again in the pytest summary."""
LINES = []


def report(number, title, ok, detail, seconds):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail} | {seconds:.1f}s"
    LINES.append(line)
    print(line, flush=True)
    return ok
