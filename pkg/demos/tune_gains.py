"""Replay the four-stage commissioning procedure for the autopilot.

Stages must run in order, each building on the last:

1. launcher-only claw tests (no wings) — does the claw lock over the
   speed grid?
2. pitch/altitude loop checkout on the light airframe (no legs fitted),
3. scripted approach into a soft mock branch — the claw must NOT lock,
4. the full nine-seed gusty mission ensemble.

Run: python3 demos/tune_gains.py
"""

from perchsim.autopilot import MissionConfig, tuning_procedure


def main():
    config = MissionConfig()
    completed = []
    for stage in (1, 2, 3, 4):
        report = tuning_procedure(stage, config, completed)
        status = "pass" if report.passed else "FAIL"
        print(f"stage {report.stage}: {status}")
        for key, value in report.metrics.items():
            print(f"    {key} = {value:.4g}")
        if report.notes:
            print(f"    note: {report.notes}")
        completed.append(stage)


if __name__ == "__main__":
    main()
