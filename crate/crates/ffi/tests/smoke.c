#include <stdio.h>
#include "qfield.h"

int main(void) {
    QfUnits *u = qf_units_si();
    double rate = 0.0;
    if (qf_dipole_rate_2p1s(u, &rate) != QF_STATUS_OK || rate < 6.0e8 || rate > 6.5e8) {
        fprintf(stderr, "rate %g\n", rate);
        return 1;
    }
    QfLattice *lat = NULL;
    if (qf_lattice_new(u, -1.0, 2, &lat) != QF_STATUS_INVALID_ARGUMENT || qf_last_error() == NULL) {
        return 2;
    }
    qf_units_free(u);
    printf("qfield %s ok\n", qf_version());
    return 0;
}
