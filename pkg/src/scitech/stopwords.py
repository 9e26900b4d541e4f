"""Fixed English stopword list, version 1.

Exactly 300 words, frozen so keyword extraction is reproducible across
runs and machines. Treat any edit as a version bump.
"""

STOPWORDS_VERSION = 1

STOPWORDS = frozenset("""
a about above across after again against all almost alone along already
also although always am among an and another any anybody anyhow anyone
anything anywhere are area around as ask at away back be became because
become becomes been before began behind being below between both but by
came can cannot case certain certainly clear clearly come could did
differ different do does done down during each early either end enough
even ever every everybody everyone everything everywhere far few find
first for found four from further general generally get give go good got
great had has have having he her here herself high him himself his how
however i if in indeed instead into is it its itself just keep kind know
large last later least less let like likely long made make many may me
might more moreover most mostly much must my myself namely near nearly
necessary need neither never nevertheless new next no nobody none nor
not nothing now nowhere of off often old on once one only onto or other
others otherwise our ours ourselves out over own part per perhaps place
point possible present put quite rather really right said same saw say
second see seem seemed seeming seems several shall she should show
showed shown shows since so some somebody somehow someone something
sometimes somewhere state still such sure take taken than that the their
theirs them themselves then there therefore these they thing things
think third this those though three through thus to today together too
toward two under until up upon us use used uses using very want was way
we well went were what whatever when whenever where wherever whether
which while who whoever whole whom whose why will with within without
would yet you your yours yourself yourselves
""".split())

assert len(STOPWORDS) == 300
