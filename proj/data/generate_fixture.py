#!/usr/bin/env python3
"""Regenerate landfalls.csv, the synthetic event fixture used by the tests.

The fixture is fully deterministic (fixed RNG seed) and shaped to exercise
every ingest path:

  * 239 events over 1901-2010, grouped per decade as
    18, 20, 23, 19, 22, 25, 21, 18, 17, 21, 35 (so 204 events fall in
    1901-2000 and 35 in 2001-2010);
  * Saffir-Simpson composition exactly 4 TD, 63 TS, 54 HC1, 42 HC2,
    59 HC3, 14 HC4, 3 HC5 (derived from wind; no category column);
  * dates inside the May 1 - November 30 season window, peaking in
    September;
  * normalization factors (inflation, wealth per capita, population) are
    present through 2004 and blank from 2005 on, so late events carry no
    standardized damage;
  * a handful of early rows have a blank base damage, and two rows carry a
    zero damage, both of which must also yield a missing damage mark.
"""

import datetime
import random

DECADE_COUNTS = [18, 20, 23, 19, 22, 25, 21, 18, 17, 21, 35]
CATEGORY_COUNTS = {
    "TD": 4,
    "TS": 63,
    "HC1": 54,
    "HC2": 42,
    "HC3": 59,
    "HC4": 14,
    "HC5": 3,
}
WIND_RANGES = {
    "TD": (25, 38),
    "TS": (39, 73),
    "HC1": (74, 95),
    "HC2": (96, 110),
    "HC3": (111, 130),
    "HC4": (131, 155),
    "HC5": (156, 185),
}
SEASON_DAYS = 214  # May 1 through November 30, non-leap reference
FIRST_YEAR = 1901
MISSING_FACTOR_YEAR = 2005  # factors blank from this year on
BLANK_DAMAGE_ROWS = 6
ZERO_DAMAGE_ROWS = 2


def season_date(year: int, day_index: int) -> datetime.date:
    return datetime.date(year, 5, 1) + datetime.timedelta(days=day_index)


def main() -> None:
    rng = random.Random(20260412)

    categories = [c for c, n in CATEGORY_COUNTS.items() for _ in range(n)]
    rng.shuffle(categories)
    assert len(categories) == sum(DECADE_COUNTS)

    events = []
    idx = 0
    for decade, count in enumerate(DECADE_COUNTS):
        for _ in range(count):
            year = FIRST_YEAR + decade * 10 + rng.randrange(10)
            # Beta-shaped day of season peaking around mid September.
            day = min(SEASON_DAYS - 1, int(rng.betavariate(4.5, 3.2) * SEASON_DAYS))
            cat = categories[idx]
            idx += 1
            lo, hi = WIND_RANGES[cat]
            wind = rng.randrange(lo, hi + 1)
            # Damage grows loosely with wind; lognormal scatter.
            damage = round(
                max(0.001, rng.lognormvariate(0.03 * wind, 1.1) * 5.0), 3
            )
            events.append([year, day, wind, damage])

    events.sort(key=lambda e: (e[0], e[1]))

    blank_rows = set(rng.sample(range(120), BLANK_DAMAGE_ROWS))
    zero_rows = set(rng.sample(sorted(set(range(120, 200)) ), ZERO_DAMAGE_ROWS))

    lines = ["date,max_wind_mph,base_damage,inflation,wealth_per_capita,population"]
    observed_damage = 0
    for i, (year, day, wind, damage) in enumerate(events):
        date = season_date(year, day)
        assert date <= datetime.date(year, 11, 30)
        t = (year - 1900) / 110.0
        inflation = round(1.0 + 11.0 * t**1.6 + rng.uniform(-0.02, 0.02), 4)
        wealth = round(1.0 + 6.5 * t**1.3 + rng.uniform(-0.02, 0.02), 4)
        population = round(1.0 + 2.8 * t + rng.uniform(-0.01, 0.01), 4)
        if i in blank_rows:
            dmg_field = ""
        elif i in zero_rows:
            dmg_field = "0"
        else:
            dmg_field = f"{damage}"
        if year >= MISSING_FACTOR_YEAR:
            factor_fields = ",,"
        else:
            factor_fields = f"{inflation},{wealth},{population}"
        if dmg_field not in ("", "0") and year < MISSING_FACTOR_YEAR:
            observed_damage += 1
        lines.append(f"{date.isoformat()},{wind},{dmg_field},{factor_fields}")

    with open("landfalls.csv", "w", encoding="ascii") as f:
        f.write("\n".join(lines) + "\n")

    by_year = {}
    for year, *_ in events:
        by_year[year] = by_year.get(year, 0) + 1
    print("events:", len(events))
    print("<=2000:", sum(n for y, n in by_year.items() if y <= 2000))
    print(">=2001:", sum(n for y, n in by_year.items() if y >= 2001))
    print(">=2005:", sum(n for y, n in by_year.items() if y >= 2005))
    print("damage observed:", observed_damage)
    print("years:", min(by_year), max(by_year))


if __name__ == "__main__":
    main()
