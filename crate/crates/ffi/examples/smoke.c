/* Minimal C client: implicit Euler on the geothermal preset. */
#include <stdio.h>
#include <stdlib.h>

#include "thermoporo.h"

static int check(TpStatus s, const char *what) {
    if (s != TP_STATUS_OK) {
        char msg[256];
        size_t len = 0;
        tp_last_error_message(msg, sizeof msg, &len);
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg);
        return 1;
    }
    return 0;
}

int main(void) {
    TpProblem *p = NULL;
    TpTrajectory *t = NULL;
    size_t nu, np, nt, len;
    TpConditions c[2];
    size_t count = 0;

    if (check(tp_problem_geothermal(4, 2, &p), "problem")) return 1;
    if (check(tp_problem_dims(p, &nu, &np, &nt), "dims")) return 1;
    if (check(tp_problem_conditions(p, c, 2, &count), "conditions")) return 1;
    printf("omega_HD = %.3f\n", c[0].omega_hd);

    TpSchemeConfig cfg = tp_scheme_config_default(TP_SCHEME_SEMI_EXPLICIT_FULL, 0.125);
    if (check(tp_run(p, &cfg, &t), "run")) return 1;
    tp_trajectory_len(t, &len);

    double *pr = malloc(np * sizeof *pr);
    double time = 0.0;
    if (check(tp_trajectory_state(t, len - 1, &time, NULL, 0, pr, np, NULL, 0), "state")) return 1;
    printf("levels = %zu, t = %.3f, p[0] = %.6e\n", len, time, pr[0]);

    free(pr);
    tp_trajectory_free(t);
    tp_problem_free(p);
    return 0;
}
