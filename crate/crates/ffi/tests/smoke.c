#include <stdio.h>
#include <string.h>

#include "modelbench.h"

static int check(MbStatus got, MbStatus want, const char *what) {
    if (got != want) {
        fprintf(stderr, "%s: status %d, expected %d\n", what, (int)got, (int)want);
        return 1;
    }
    return 0;
}

int main(void) {
    MbSession *s = mb_session_new();
    char *out = NULL;
    int bad = 0;

    bad |= check(mb_session_execute(s, "fixtures load expr", &out), MB_STATUS_OK, "load");
    mb_string_free(out);
    bad |= check(mb_session_execute(s, "set e0.val 112", &out), MB_STATUS_OK, "set");
    mb_string_free(out);
    bad |= check(mb_session_execute(s, "select e4", &out), MB_STATUS_OK, "select");
    mb_string_free(out);
    bad |= check(mb_session_eval(s, "data.$val.value", &out), MB_STATUS_OK, "eval");
    if (out == NULL || strcmp(out, "784") != 0) {
        fprintf(stderr, "eval printed %s\n", out ? out : "(null)");
        bad = 1;
    }
    mb_string_free(out);
    bad |= check(mb_session_execute(s, "select #424242", &out), MB_STATUS_NOT_FOUND, "missing");
    mb_string_free(out);
    bad |= check(mb_session_eval(s, NULL, NULL), MB_STATUS_NULL_ARGUMENT, "null");

    printf("%s %s\n", mb_version(), bad ? "FAIL" : "ok");
    mb_session_free(s);
    return bad;
}
