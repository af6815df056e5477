#include <math.h>
#include <stdio.h>
#include <string.h>

#include "flatsteer.h"

static const char *ZERO =
    "{\"schema_version\": 1,"
    " \"problem\": {\"setting\": \"neumann\", \"horizon\": 0.5},"
    " \"target\": {\"kind\": \"builtin\", \"name\": \"zero\"},"
    " \"synthesis\": {\"method\": \"petzsche\", \"r_prime\": 1.21},"
    " \"simulation\": {\"nx\": 32, \"nt\": 32}}";

int main(void) {
    if (fabs(fs_r0() - 1.2019433684703145) > 1e-12) return 1;

    FsConfig *cfg = NULL;
    if (fs_config_from_json("{\"schema_version\": 9}", &cfg) != FS_STATUS_SCHEMA || cfg) return 2;
    char msg[256];
    if (fs_last_error(msg, sizeof msg) == 0 || strstr(msg, "schema_version") == NULL) return 3;

    if (fs_config_from_json(ZERO, &cfg) != FS_STATUS_OK) return 4;
    FsResult *res = NULL;
    if (fs_verify(cfg, 0, 0.0, &res) != FS_STATUS_OK) return 5;
    size_t n = fs_result_len(res);
    double xs[64], u[64];
    if (n != 33 || fs_result_terminal(res, xs, u, 64) != FS_STATUS_OK) return 6;
    if (!fs_result_passed(res) || u[n / 2] != 0.0 || xs[n - 1] != 1.0) return 7;
    fs_result_free(res);
    fs_config_free(cfg);
    printf("ok\n");
    return 0;
}
