"""
Rotating contact identifiers and the one-way disclosure chain
=============================================================

Devices broadcast a fresh 16-byte identifier every 15 minutes, derived
from a one-way SHA-256 key chain.  Observers log what they hear; a
diagnosis report discloses one intermediate key plus an index range,
which reveals exactly the identifiers in that range and nothing before.
"""

import random

from anontrace import ContactLog, TcnRatchet, TcnReport, rotation_index
from anontrace.dayfile import day_start
from anontrace.tcn import ROTATION_PERIOD_S

T0 = day_start("2023-11-15")
INDEX0 = rotation_index(T0)

# Alice's device generates its chain at midnight.
alice = TcnRatchet.generate(INDEX0, rng=random.Random(42))

print(f"rotation period: {ROTATION_PERIOD_S} s ({86_400 // ROTATION_PERIOD_S} per day)")
print(f"identifier at 00:00  {alice.tcn_at(INDEX0).hex()}")
print(f"identifier at 00:15  {alice.tcn_at(INDEX0 + 1).hex()}")
print(f"identifier at 12:00  {alice.tcn_at(INDEX0 + 48).hex()}")

# Bob sits next to Alice from 09:00 to 09:40; his radio hears her
# identifier many times but the log keeps one record per rotation window.
bob_log = ContactLog()
for t in range(T0 + 9 * 3600, T0 + 9 * 3600 + 2400, 10):
    bob_log.record_observation(alice.tcn_at(rotation_index(t)), t)
print(f"240 sightings merged into {len(bob_log)} contact records")

# Alice is diagnosed and reports her identifiers from 06:00 onward.
# The report is one 32-byte key and two integers, not 72 identifiers.
report = alice.build_report(INDEX0 + 24, INDEX0 + 95)
print(f"report covers indices {report.start_index}..{report.end_index}")

# Anyone can expand the report forward...
revealed = set(report.expand())
heard = bob_log.observed_tcns()
print(f"bob's overlap with the report: {len(heard & revealed)} of {len(heard)} records")

# ...but nothing before the disclosed index is derivable: the 05:45
# identifier is simply not in the expansion.
before = alice.tcn_at(INDEX0 + 23)
print(f"pre-report identifier revealed: {before in revealed}")

# The same report, rebuilt from its wire form, expands identically.
wire = TcnReport(report.chain_key_at_start, report.start_index, report.end_index)
print(f"wire round trip identical: {wire.expand() == report.expand()}")
