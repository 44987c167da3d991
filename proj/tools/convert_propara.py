#!/usr/bin/env python3
# tools/convert_propara.py

# Copyright 2026 The protrack Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""Converts ProPara location grids into protrack corpus records.

Input is one grids.v1.<split>.json file: one JSON object per line with
para_id, sentence_texts, participants and states, where states[i] holds the
T + 1 locations of participant i. State labels are derived from consecutive
locations:

  "-" -> "-"   outside_before until the entity first exists, else outside_after
  "-" -> x     create
  x   -> "-"   destroy
  x   -> x     exist
  x   -> y     move

Usage: convert_propara.py grids.v1.train.json > train.jsonl
"""

import argparse
import json
import sys


def derive_states(locations):
    states = []
    existed = locations[0] != "-"
    for before, after in zip(locations, locations[1:]):
        if before == "-" and after == "-":
            states.append("outside_after" if existed else "outside_before")
        elif before == "-":
            states.append("create")
            existed = True
        elif after == "-":
            states.append("destroy")
        elif before.strip().lower() == after.strip().lower():
            states.append("exist")
        else:
            states.append("move")
    return states


def convert(record):
    steps = record["sentence_texts"]
    entities, gold = [], {}
    for raw, locations in zip(record["participants"], record["states"]):
        if len(locations) != len(steps) + 1:
            raise ValueError(f"{record['para_id']}: '{raw}' has {len(locations)} "
                             f"locations for {len(steps)} steps")
        eid, n = raw, 2
        while eid in gold:  # repeated participant strings
            eid, n = f"{raw}#{n}", n + 1
        entities.append({"id": eid, "raw_name": raw})
        gold[eid] = {"states": derive_states(locations), "locations": locations}
    return {"id": str(record["para_id"]), "steps": steps,
            "entities": entities, "gold": gold}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("grid_file")
    args = parser.parse_args()
    with open(args.grid_file, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                print(json.dumps(convert(json.loads(line)), ensure_ascii=False))


if __name__ == "__main__":
    sys.exit(main())
