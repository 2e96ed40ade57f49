/* cc -I crates/ffi/include crates/ffi/examples/demo.c \
 *    -L target/release -l:libd2d_eegame_ffi.a -lm -lpthread -ldl */
#include <stdio.h>
#include <stdlib.h>

#include "d2d_eegame.h"

int main(void) {
    D2dInstance *inst = NULL;
    if (d2d_instance_generate(5, 3, 1, 0, &inst) != D2D_STATUS_OK) {
        fprintf(stderr, "%s\n", d2d_last_error_message());
        return 1;
    }
    size_t n = 0, k = 0;
    d2d_instance_dims(inst, &n, &k);
    double *d2d = calloc(n * k, sizeof *d2d);
    double *cell = calloc(k, sizeof *cell);
    D2dGameResult res;
    D2dStatus st = d2d_run_game(inst, D2D_POLICY_ENERGY_EFFICIENT, 20, 0, d2d, cell, &res);
    if (st != D2D_STATUS_OK) {
        fprintf(stderr, "%s\n", d2d_last_error_message());
    } else {
        printf("d2d-eegame %s: %zu rounds, converged %d, network EE %.3f\n", d2d_version(), res.rounds, res.converged,
               res.network_ee);
    }
    free(d2d);
    free(cell);
    d2d_instance_free(inst);
    return st == D2D_STATUS_OK ? 0 : 1;
}
