"""Published AUC and loss blocks used for replay checks.

Loss rows list the off-diagonal cells in column order (the diagonal is "-").
"""

TABLE4_COURSES = ("HCI", "IS", "ICS2", "IP2", "PM2")
TABLE6_COURSES = ("ICS1", "ICS3", "ICS4")

TABLE4 = {
    "discretized": {
        "auc": [
            [.710, .672, .608, .614, .624],
            [.509, .672, .512, .576, .629],
            [.675, .633, .717, .632, .662],
            [.536, .651, .512, .704, .630],
            [.501, .560, .562, .577, .666],
        ],
        "loss": [
            [.038, .102, .095, .085],
            [.163, .159, .096, .043],
            [.042, .083, .085, .055],
            [.169, .053, .192, .074],
            [.166, .107, .104, .089],
        ],
        "loss_avg": [.08, .12, .07, .12, .12],
        "loss_mean": .10,
    },
    "numeric": {
        "auc": [
            [.890, .511, .592, .535, .528],
            [.488, .886, .498, .555, .629],
            [.602, .600, .799, .639, .661],
            [.483, .484, .589, .849, .550],
            [.501, .591, .483, .544, .909],
        ],
        "loss": [
            [.379, .298, .355, .362],
            [.398, .388, .331, .257],
            [.197, .199, .160, .138],
            [.366, .364, .260, .298],
            [.408, .318, .426, .364],
        ],
        "loss_avg": [.35, .34, .17, .32, .38],
        "loss_mean": .31,
    },
}

TABLE6 = {
    "numeric": {
        "auc": [
            [.860, .592, .500],
            [.506, .820, .560],
            [.510, .531, .832],
        ],
        "loss": [[.268, .360], [.314, .260], [.322, .301]],
        "loss_avg": [.31, .29, .31],
        "loss_mean": .30,
    },
    "discretized": {
        "auc": [
            [.722, .615, .683],
            [.512, .750, .565],
            [.500, .500, .600],
        ],
        "loss": [[.107, .039], [.239, .186], [.100, .100]],
        "loss_avg": [.07, .21, .10],
        "loss_mean": .13,
    },
}

# published cells are 3-decimal roundings, so recomputed differences may be
# off by one unit in the last place
CELL_TOL = 0.001 + 1e-9
AVG_TOL = 0.005


def replay(table, courses):
    """Yield (label, recomputed, published, tolerance) for every loss cell,
    row average and grand mean of every block in ``table``."""
    from ontoport.transfer_eval import auc_matrix, loss_matrix

    for rep, block in table.items():
        loss = loss_matrix(auc_matrix(courses, block["auc"]))
        for i, code in enumerate(courses):
            for published, got in zip(block["loss"][i], (v for j, v in enumerate(loss.cells[i]) if j != i)):
                yield f"{rep} {code}", got, published, CELL_TOL
            yield f"{rep} {code} avg", loss.row_averages[i], block["loss_avg"][i], AVG_TOL
        yield f"{rep} mean", loss.grand_mean, block["loss_mean"], AVG_TOL
