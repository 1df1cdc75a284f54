"""Frozen oracle values; regenerate with tests/tools/make_reference.py."""

Q_MOMENTS = {
    (3.0, 1.0): (0.012251267040980273755, -0.057902347363487349083, 0.077513336416868919723, -0.02114854624054652782),
    (2.0, 0.5): (0.092899959138599141481, -0.15353676633037656415, 0.080023001706854461742, 0.10903153511201000089),
}

P_MOMENTS = {
    (2.0, -1.0): (0.33853399113390813217, -0.66292049962318781455, -0.76934054193401978898, -0.014147482644628449788),
    (1.5, 0.7): (0.94600743984585673648, 0.62407579271329963332, 0.10250752703692254971, -0.98215810486947538911),
}

KERNEL_KP = {
    (0.3, -0.7, 1.0): 0.057527398974347310713,
    (0.0, 0.0, 0.0): 0.15561232394812415622,
    (1.0, 0.2, 1.0): 0.1279674674601717338,
}
