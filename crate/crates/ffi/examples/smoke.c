#include <stdio.h>
#include <stdlib.h>
#include "qreadout.h"

int main(void) {
    double ec = 0.0;
    if (qr_charging_energy_ghz(85e-15, &ec) != QR_STATUS_OK) return 2;

    if (qr_charging_energy_ghz(-1.0, &ec) != QR_STATUS_DOMAIN || qr_last_error_message() == NULL) return 3;

    const double kappa = 1.0 / 300e-9, chi = 3.14159265358979 * 930e3;
    QrReadoutConfig *cfg = NULL;
    if (qr_readout_config_calibrated(kappa, chi, 700e-9, 5.0, 700e-9, 500, 7, &cfg) != QR_STATUS_OK) return 4;

    QrShotSet *shots = NULL;
    if (qr_simulate_shots(cfg, 2, &shots) != QR_STATUS_OK) return 5;
    size_t n = qr_shot_set_len(shots);
    double *i = malloc(n * sizeof(double)), *q = malloc(n * sizeof(double));
    if (qr_shot_set_copy(shots, QR_STATE_EXCITED, i, q, n) != QR_STATUS_OK) return 6;

    double snr = 0.0;
    qr_snr_asymptotic(cfg, &snr);
    printf("%s %zu %.6f %.17g\n", qr_version(), n, snr, i[0]);

    free(i);
    free(q);
    qr_shot_set_free(shots);
    qr_readout_config_free(cfg);
    return 0;
}
