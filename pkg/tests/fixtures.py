"""Frozen reference distributions for chart and round-trip regression tests.

NN_* hold 24 nearest-neighbour bin values (0.25 m bins over [0, 6) m) for a
large keynote-style crowd and a small breakout group. HEIGHT_* hold 14
height bin values (0.5 m bins over [0, 7) m) for the same crowd and a break
session. Values are pre-normalised figure series, frozen verbatim.
"""

NN_KEYNOTE = (
    0.02851382, 0.03542627, 0.07430876, 0.11751152, 0.19009217, 0.59360599,
    0.15552995, 0.18577189, 0.36895161, 0.16417051, 0.16330645, 0.18663594,
    0.22292627, 0.0812212, 0.06480415, 0.05529954, 0.09245392, 0.02073733,
    0.09158986, 0.04752304, 0.04406682, 0.00604839, 0.00432028, 0.00518433,
)

NN_ROOM_A = (
    0.01699235, 0.09260833, 0.19031436, 0.64655905, 0.64740867, 0.55480034,
    0.35683942, 0.24468989, 0.13508921, 0.02209006, 0.04078165, 0.02548853,
    0.00254885, 0.00764656, 0.00339847, 0.01019541, 0.0, 0.0, 0.00084962, 0.0,
    0.00169924, 0.0, 0.0, 0.0,
)

HEIGHT_KEYNOTE = (
    0.82414995, 0.02769144, 0.06417381, 0.07604157, 0.20702647, 0.20219145,
    0.03560328, 0.02813098, 0.01846096, 0.02197733, 0.0131864, 0.02857053,
    0.00835139, 0.0,
)

HEIGHT_SECOND_BREAK = (
    1.15066523, 0.17619561, 0.00575333, 0.0273283, 0.00862999, 0.01654081,
    0.01150665, 0.00287666, 0.06040992, 0.0546566, 0.01150665, 0.0294858, 0.0,
    0.0,
)
