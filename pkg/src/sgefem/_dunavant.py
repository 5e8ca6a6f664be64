"""Symmetric Gauss rules for the reference triangle, stored in compressed
orbit form: (orbit size, barycentric triple, weight). Orbit size 1 is the
centroid, 3 expands to cyclic permutations, 6 to cyclic plus reversed ones.
Weights sum to 1; only rules with all-positive weights and all points
inside the triangle are kept."""

ORBITS = {
    1: [
        (1, 0.333333333333333, 0.333333333333333, 0.333333333333333, 1.000000000000000),
    ],
    2: [
        (3, 0.666666666666667, 0.166666666666667, 0.166666666666667, 0.333333333333333),
    ],
    4: [
        (3, 0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011),
        (3, 0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322),
    ],
    5: [
        (1, 0.333333333333333, 0.333333333333333, 0.333333333333333, 0.225000000000000),
        (3, 0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506),
        (3, 0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827),
    ],
    6: [
        (3, 0.501426509658179, 0.249286745170910, 0.249286745170910, 0.116786275726379),
        (3, 0.873821971016996, 0.063089014491502, 0.063089014491502, 0.050844906370207),
        (6, 0.053145049844817, 0.310352451033784, 0.636502499121399, 0.082851075618374),
    ],
    8: [
        (1, 0.333333333333333, 0.333333333333333, 0.333333333333333, 0.144315607677787),
        (3, 0.081414823414554, 0.459292588292723, 0.459292588292723, 0.095091634267285),
        (3, 0.658861384496480, 0.170569307751760, 0.170569307751760, 0.103217370534718),
        (3, 0.898905543365938, 0.050547228317031, 0.050547228317031, 0.032458497623198),
        (6, 0.008394777409958, 0.263112829634638, 0.728492392955404, 0.027230314174435),
    ],
    9: [
        (1, 0.333333333333333, 0.333333333333333, 0.333333333333333, 0.097135796282799),
        (3, 0.020634961602525, 0.489682519198738, 0.489682519198738, 0.031334700227139),
        (3, 0.125820817014127, 0.437089591492937, 0.437089591492937, 0.077827541004774),
        (3, 0.623592928761935, 0.188203535619033, 0.188203535619033, 0.079647738927210),
        (3, 0.910540973211095, 0.044729513394453, 0.044729513394453, 0.025577675658698),
        (6, 0.036838412054736, 0.221962989160766, 0.741198598784498, 0.043283539377289),
    ],
    10: [
        (1, 0.333333333333333, 0.333333333333333, 0.333333333333333, 0.090817990382754),
        (3, 0.028844733232685, 0.485577633383657, 0.485577633383657, 0.036725957756467),
        (3, 0.781036849029926, 0.109481575485037, 0.109481575485037, 0.045321059435528),
        (6, 0.141707219414880, 0.307939838764121, 0.550352941820999, 0.072757916845420),
        (6, 0.025003534762686, 0.246672560639903, 0.728323904597411, 0.028327242531057),
        (6, 0.009540815400299, 0.066803251012200, 0.923655933587500, 0.009421666963733),
    ],
    12: [
        (3, 0.023565220452390, 0.488217389773805, 0.488217389773805, 0.025731066440455),
        (3, 0.120551215411079, 0.439724392294460, 0.439724392294460, 0.043692544538038),
        (3, 0.457579229975768, 0.271210385012116, 0.271210385012116, 0.062858224217885),
        (3, 0.744847708916828, 0.127576145541586, 0.127576145541586, 0.034796112930709),
        (3, 0.957365299093579, 0.021317350453210, 0.021317350453210, 0.006166261051559),
        (6, 0.115343494534698, 0.275713269685514, 0.608943235779788, 0.040371557766381),
        (6, 0.022838332222257, 0.281325580989940, 0.695836086787803, 0.022356773202303),
        (6, 0.025734050548330, 0.116251915907597, 0.858014033544073, 0.017316231108659),
    ],
}
