"""Run the acceptance tests and print the PASS/FAIL summary, one line per criterion."""
import re
import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[1]
proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-s", str(root / "tests" / "test_acceptance.py"), *sys.argv[1:]],
                      capture_output=True, text=True)
lines = [l for l in proc.stdout.splitlines() if re.match(r"CRITERION \d+:", l)]
print("\n".join(lines) if lines else proc.stdout[-2000:])
sys.exit(proc.returncode)
